// Copyright 2026 The iqpborn Authors
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>

#include "iqpborn/run_dir.hpp"

namespace iqpborn {
namespace {

namespace fs = std::filesystem;

fs::path fresh_dir(const std::string& name) {
    const auto d = fs::temp_directory_path() / name;
    fs::remove_all(d);
    fs::create_directories(d);
    return d;
}

void put(const fs::path& p, const std::string& s) {
    std::ofstream out(p, std::ios::binary | std::ios::trunc);
    out << s;
}

TEST(BlobHash, MatchesGitHashObject) {
    EXPECT_EQ(git_blob_sha1(""), "e69de29bb2d1d6434b8b29ae775ad8c2e48c5391");
    EXPECT_EQ(git_blob_sha1("hello\n"), "ce013625030ba8dba906f756967f9e9ca394464a");
}

TEST(BlobHash, BinaryContentWithNulBytes) {
    const std::string a("a\0b", 3);
    const std::string b("a\0c", 3);
    EXPECT_NE(git_blob_sha1(a), git_blob_sha1(b));
    EXPECT_EQ(git_blob_sha1(a).size(), 40U);
}

TEST(Manifest, IntactRunVerifies) {
    const auto d = fresh_dir("iqpborn_manifest_ok");
    put(d / "a.json", "{\"x\": 1}\n");
    put(d / "b.csv", "epoch,loss\n0,1\n");
    const auto m = write_manifest(d, {{"seed", 42}}, {"a.json", "b.csv"});
    EXPECT_EQ(m.artifacts.at("a.json"), git_blob_sha1("{\"x\": 1}\n"));
    EXPECT_TRUE(verify_manifest(d).empty());
    const auto back = manifest_from_json(nlohmann::json::parse(read_file_bytes(d / "manifest.json")));
    EXPECT_EQ(back.config.at("seed"), 42);
    EXPECT_EQ(back.version, kVersion);
}

TEST(Manifest, DetectsTamperingAndDeletion) {
    const auto d = fresh_dir("iqpborn_manifest_bad");
    put(d / "a.json", "1");
    put(d / "b.csv", "2");
    (void)write_manifest(d, nlohmann::json::object(), {"a.json", "b.csv"});
    put(d / "a.json", "3");
    fs::remove(d / "b.csv");
    const auto bad = verify_manifest(d);
    ASSERT_EQ(bad.size(), 2U);
    EXPECT_EQ(bad[0], "a.json (hash mismatch)");
    EXPECT_EQ(bad[1], "b.csv (missing)");
}

TEST(Manifest, RecordsInputHashes) {
    const auto d = fresh_dir("iqpborn_manifest_in");
    put(d / "raw.csv", "x\n1\n");
    put(d / "out.txt", "y");
    const auto m = write_manifest(d, nlohmann::json::object(), {"out.txt"}, {d / "raw.csv"});
    EXPECT_EQ(m.inputs.at((d / "raw.csv").string()), git_blob_sha1("x\n1\n"));
}

TEST(Manifest, MissingArtifactAtWriteThrows) {
    const auto d = fresh_dir("iqpborn_manifest_missing");
    EXPECT_THROW((void)write_manifest(d, nlohmann::json::object(), {"nope.json"}), std::runtime_error);
}

}  // namespace
}  // namespace iqpborn
