// Copyright 2026 The iqpborn Authors
// SPDX-License-Identifier: Apache-2.0

/**
 * @file run_dir.hpp
 * @brief Run-directory manifests with git-style blob hashes.
 *
 * Needs libcrypto; the core headers do not include this one.
 */

#pragma once

#include <array>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>
#include <openssl/evp.h>

#include "iqpborn/version.hpp"

namespace iqpborn {

/// SHA-1 of "blob <size>\0<content>", as `git hash-object` computes.
[[nodiscard]] inline std::string git_blob_sha1(const std::string& content) {
    const std::string header = "blob " + std::to_string(content.size()) + '\0';
    std::array<unsigned char, EVP_MAX_MD_SIZE> md{};
    unsigned int len = 0;
    EVP_MD_CTX* ctx = EVP_MD_CTX_new();
    if (ctx == nullptr) throw std::runtime_error("EVP_MD_CTX_new failed");
    const bool ok = EVP_DigestInit_ex(ctx, EVP_sha1(), nullptr) == 1 &&
                    EVP_DigestUpdate(ctx, header.data(), header.size()) == 1 &&
                    EVP_DigestUpdate(ctx, content.data(), content.size()) == 1 &&
                    EVP_DigestFinal_ex(ctx, md.data(), &len) == 1;
    EVP_MD_CTX_free(ctx);
    if (!ok) throw std::runtime_error("SHA-1 digest failed");
    std::string hex;
    char buf[3];
    for (unsigned int i = 0; i < len; ++i) {
        std::snprintf(buf, sizeof buf, "%02x", md[i]);
        hex += buf;
    }
    return hex;
}

[[nodiscard]] inline std::string read_file_bytes(const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    if (!in) throw std::runtime_error("cannot read " + p.string());
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

[[nodiscard]] inline std::string hash_file(const std::filesystem::path& p) { return git_blob_sha1(read_file_bytes(p)); }

struct Manifest {
    nlohmann::json config;
    std::map<std::string, std::string> inputs;     ///< absolute or user-given path → hash
    std::map<std::string, std::string> artifacts;  ///< path relative to the run dir → hash
    std::string version = kVersion;
};

inline nlohmann::json to_json(const Manifest& m) {
    return {{"config", m.config}, {"inputs", m.inputs}, {"artifacts", m.artifacts}, {"version", m.version}};
}

inline Manifest manifest_from_json(const nlohmann::json& j) {
    Manifest m;
    m.config = j.value("config", nlohmann::json::object());
    m.inputs = j.value("inputs", std::map<std::string, std::string>{});
    m.artifacts = j.at("artifacts").get<std::map<std::string, std::string>>();
    m.version = j.value("version", std::string{});
    return m;
}

/// Hashes the listed run-dir files and writes manifest.json.
inline Manifest write_manifest(const std::filesystem::path& dir, const nlohmann::json& config,
                               const std::vector<std::string>& artifacts,
                               const std::vector<std::filesystem::path>& inputs = {}) {
    Manifest m;
    m.config = config;
    for (const auto& a : artifacts) m.artifacts[a] = hash_file(dir / a);
    for (const auto& i : inputs) m.inputs[i.string()] = hash_file(i);
    std::ofstream out(dir / "manifest.json", std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write " + (dir / "manifest.json").string());
    out << to_json(m).dump(2) << '\n';
    return m;
}

/// Names of missing or modified artifacts; empty means the run is intact.
[[nodiscard]] inline std::vector<std::string> verify_manifest(const std::filesystem::path& dir) {
    const auto m = manifest_from_json(nlohmann::json::parse(read_file_bytes(dir / "manifest.json")));
    std::vector<std::string> bad;
    for (const auto& [name, hash] : m.artifacts) {
        const auto p = dir / name;
        if (!std::filesystem::exists(p)) {
            bad.push_back(name + " (missing)");
        } else if (hash_file(p) != hash) {
            bad.push_back(name + " (hash mismatch)");
        }
    }
    return bad;
}

}  // namespace iqpborn
