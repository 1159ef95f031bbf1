// Copyright 2026 The iqpborn Authors
// SPDX-License-Identifier: Apache-2.0

/**
 * @file encoding.hpp
 * @brief Tabular ingestion, train/test splits, quantile binary encoding and
 * exact data-side correlators.
 */

#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "iqpborn/bitops.hpp"
#include "iqpborn/diagnostics.hpp"
#include "iqpborn/gate_graph.hpp"
#include "iqpborn/pearson.hpp"
#include "iqpborn/rng.hpp"
#include "iqpborn/vdn.hpp"

namespace iqpborn {

/// N×D real table, row-major.
struct RawTable {
    std::size_t N = 0;
    int D = 0;
    std::vector<double> values;
    std::vector<std::string> columns;

    [[nodiscard]] double operator()(std::size_t i, int f) const {
        return values[i * static_cast<std::size_t>(D) + static_cast<std::size_t>(f)];
    }
};

inline void validate(const RawTable& t) {
    if (t.D < 1) throw ContractError("RawTable: D must be >= 1");
    if (t.values.size() != t.N * static_cast<std::size_t>(t.D)) {
        throw ContractError("RawTable: value count does not match N*D");
    }
    for (std::size_t i = 0; i < t.values.size(); ++i) {
        if (!std::isfinite(t.values[i])) {
            throw ContractError("RawTable: non-finite entry at row " +
                                std::to_string(i / static_cast<std::size_t>(t.D)));
        }
    }
}

/// CSV with one header row, D numeric columns, one sample per row.
[[nodiscard]] inline RawTable read_csv(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open input file: " + path.string());
    RawTable t;
    std::string line;
    if (!std::getline(in, line)) throw std::runtime_error("empty CSV file: " + path.string());
    {
        std::stringstream ss(line);
        std::string cell;
        while (std::getline(ss, cell, ',')) t.columns.push_back(cell);
    }
    t.D = static_cast<int>(t.columns.size());
    std::size_t lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty() || line == "\r") continue;
        std::stringstream ss(line);
        std::string cell;
        int count = 0;
        while (std::getline(ss, cell, ',')) {
            char* end = nullptr;
            const double v = std::strtod(cell.c_str(), &end);
            if (end == cell.c_str()) {
                throw std::runtime_error(path.string() + ":" + std::to_string(lineno) +
                                         ": not a number: '" + cell + "'");
            }
            t.values.push_back(v);
            ++count;
        }
        if (count != t.D) {
            throw std::runtime_error(path.string() + ":" + std::to_string(lineno) + ": expected " +
                                     std::to_string(t.D) + " columns, got " + std::to_string(count));
        }
        ++t.N;
    }
    validate(t);
    return t;
}

/// Little-endian float64 row-major payload with a JSON sidecar `<path>.json`
/// holding {"N": ..., "D": ...}.
[[nodiscard]] inline RawTable read_binary(const std::filesystem::path& path) {
    const auto sidecar = std::filesystem::path(path.string() + ".json");
    std::ifstream js(sidecar);
    if (!js) throw std::runtime_error("cannot open sidecar: " + sidecar.string());
    const auto meta = nlohmann::json::parse(js);
    RawTable t;
    t.N = meta.at("N").get<std::size_t>();
    t.D = meta.at("D").get<int>();
    t.values.resize(t.N * static_cast<std::size_t>(t.D));
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open input file: " + path.string());
    in.read(reinterpret_cast<char*>(t.values.data()),
            static_cast<std::streamsize>(t.values.size() * sizeof(double)));
    if (in.gcount() != static_cast<std::streamsize>(t.values.size() * sizeof(double))) {
        throw std::runtime_error("binary payload shorter than N*D doubles: " + path.string());
    }
    for (int f = 0; f < t.D; ++f) t.columns.push_back("f" + std::to_string(f));
    validate(t);
    return t;
}

[[nodiscard]] inline RawTable load_table(const std::filesystem::path& path) {
    if (!std::filesystem::exists(path)) {
        throw std::runtime_error("input file does not exist: " + path.string());
    }
    return path.extension() == ".csv" ? read_csv(path) : read_binary(path);
}

inline void write_csv(const std::filesystem::path& path, const RawTable& t) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    for (int f = 0; f < t.D; ++f) {
        out << (f ? "," : "")
            << (static_cast<std::size_t>(f) < t.columns.size() ? t.columns[static_cast<std::size_t>(f)]
                                                               : "f" + std::to_string(f));
    }
    out << '\n';
    out.precision(17);
    for (std::size_t i = 0; i < t.N; ++i) {
        for (int f = 0; f < t.D; ++f) out << (f ? "," : "") << t(i, f);
        out << '\n';
    }
}

[[nodiscard]] inline RawTable select_rows(const RawTable& t, const std::vector<std::size_t>& rows) {
    RawTable out{rows.size(), t.D, {}, t.columns};
    out.values.reserve(rows.size() * static_cast<std::size_t>(t.D));
    for (auto r : rows) {
        if (r >= t.N) throw ContractError("select_rows: row index out of range");
        for (int f = 0; f < t.D; ++f) out.values.push_back(t(r, f));
    }
    return out;
}

struct Split {
    std::size_t N = 0;
    std::uint64_t seed = 0;
    std::vector<std::size_t> train;
    std::vector<std::size_t> test;
};

/// 80/20 split, a pure function of (N, seed); n_train = round(0.8 N).
[[nodiscard]] inline Split make_split(std::size_t N, std::uint64_t seed, double train_fraction = 0.8) {
    std::vector<std::size_t> perm(N);
    std::iota(perm.begin(), perm.end(), std::size_t{0});
    Stream rng(StreamTag::Split, {seed, N});
    for (std::size_t i = N; i > 1; --i) std::swap(perm[i - 1], perm[rng.below(i)]);
    const auto n_train = static_cast<std::size_t>(std::llround(train_fraction * static_cast<double>(N)));
    Split s{N, seed, {perm.begin(), perm.begin() + static_cast<std::ptrdiff_t>(n_train)},
            {perm.begin() + static_cast<std::ptrdiff_t>(n_train), perm.end()}};
    std::sort(s.train.begin(), s.train.end());
    std::sort(s.test.begin(), s.test.end());
    return s;
}

inline nlohmann::json to_json(const Split& s) {
    return {{"N", s.N}, {"seed", s.seed}, {"train", s.train}, {"test", s.test}};
}

inline Split split_from_json(const nlohmann::json& j) {
    return {j.at("N").get<std::size_t>(), j.at("seed").get<std::uint64_t>(),
            j.at("train").get<std::vector<std::size_t>>(), j.at("test").get<std::vector<std::size_t>>()};
}

struct QuantileEncoder {
    int D = 0;
    int B = 0;
    std::vector<std::vector<double>> thresholds;  ///< D rows of 2^B − 1 cut points

    [[nodiscard]] int levels() const noexcept { return 1 << B; }
};

inline nlohmann::json to_json(const QuantileEncoder& e) {
    return {{"D", e.D}, {"B", e.B}, {"thresholds", e.thresholds}};
}

inline QuantileEncoder encoder_from_json(const nlohmann::json& j) {
    QuantileEncoder e{j.at("D").get<int>(), j.at("B").get<int>(),
                      j.at("thresholds").get<std::vector<std::vector<double>>>()};
    if (static_cast<int>(e.thresholds.size()) != e.D) throw ContractError("encoder: thresholds rows != D");
    for (const auto& row : e.thresholds) {
        if (static_cast<int>(row.size()) != e.levels() - 1) throw ContractError("encoder: bad threshold count");
        if (!std::is_sorted(row.begin(), row.end())) throw ContractError("encoder: thresholds not monotone");
    }
    return e;
}

/// Linear-interpolation quantile of sorted data.
[[nodiscard]] inline double sorted_quantile(const std::vector<double>& sorted, double q) {
    const double h = q * static_cast<double>(sorted.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(h));
    if (lo + 1 >= sorted.size()) return sorted.back();
    return sorted[lo] + (h - static_cast<double>(lo)) * (sorted[lo + 1] - sorted[lo]);
}

/// Cut points at the empirical quantiles m/2^B, m = 1..2^B−1, per feature.
[[nodiscard]] inline QuantileEncoder fit_encoder(const RawTable& train, int B) {
    if (B < 1 || B > 16) throw ContractError("fit_encoder: B must be in [1, 16]");
    if (train.N == 0) throw ContractError("fit_encoder: empty training table");
    const int levels = 1 << B;
    if (train.N < static_cast<std::size_t>(levels)) {
        warn("fit_encoder: N=" + std::to_string(train.N) + " is below 2^B=" + std::to_string(levels));
    }
    QuantileEncoder e{train.D, B, {}};
    std::vector<double> col(train.N);
    for (int f = 0; f < train.D; ++f) {
        for (std::size_t i = 0; i < train.N; ++i) col[i] = train(i, f);
        std::sort(col.begin(), col.end());
        if (col.front() == col.back()) {
            warn("fit_encoder: feature " + std::to_string(f) + " is constant; all samples map to level 0");
        }
        std::vector<double> cuts(static_cast<std::size_t>(levels - 1));
        for (int m = 1; m < levels; ++m) {
            cuts[static_cast<std::size_t>(m - 1)] = sorted_quantile(col, static_cast<double>(m) / levels);
        }
        e.thresholds.push_back(std::move(cuts));
    }
    return e;
}

/// Bits b_{f,k} of feature f live on qubit f·B + k; level = Σ_k 2^{B−1−k} b_{f,k}.
struct EncodedTable {
    std::size_t N = 0;
    int D = 0;
    int B = 0;
    std::vector<BitString> bitstrings;
    std::vector<int> levels;  ///< N×D

    [[nodiscard]] int n() const noexcept { return D * B; }
    [[nodiscard]] int level(std::size_t i, int f) const {
        return levels[i * static_cast<std::size_t>(D) + static_cast<std::size_t>(f)];
    }
};

[[nodiscard]] inline BitString levels_to_bits(std::span<const int> levels, int B) {
    const int D = static_cast<int>(levels.size());
    BitString x(D * B);
    for (int f = 0; f < D; ++f)
        for (int k = 0; k < B; ++k)
            if ((levels[static_cast<std::size_t>(f)] >> (B - 1 - k)) & 1) x.set(f * B + k);
    return x;
}

[[nodiscard]] inline std::vector<int> bits_to_levels(const BitString& x, int D, int B) {
    if (x.width() != D * B) throw ContractError("bits_to_levels: width != D*B");
    std::vector<int> out(static_cast<std::size_t>(D), 0);
    for (int f = 0; f < D; ++f)
        for (int k = 0; k < B; ++k)
            if (x.test(f * B + k)) out[static_cast<std::size_t>(f)] += 1 << (B - 1 - k);
    return out;
}

/// level = #{thresholds < value}.
[[nodiscard]] inline int quantize(const std::vector<double>& cuts, double v) {
    return static_cast<int>(std::lower_bound(cuts.begin(), cuts.end(), v) - cuts.begin());
}

[[nodiscard]] inline EncodedTable encode(const RawTable& table, const QuantileEncoder& enc) {
    if (table.D != enc.D) {
        throw ContractError("encode: table has D=" + std::to_string(table.D) + ", encoder has D=" +
                            std::to_string(enc.D));
    }
    if (enc.D * enc.B > kMaxQubits) throw ContractError("encode: D*B exceeds 128 qubits");
    EncodedTable out{table.N, table.D, enc.B, {}, {}};
    out.levels.resize(table.N * static_cast<std::size_t>(table.D));
    out.bitstrings.reserve(table.N);
    std::vector<int> row(static_cast<std::size_t>(table.D));
    for (std::size_t i = 0; i < table.N; ++i) {
        for (int f = 0; f < table.D; ++f) {
            row[static_cast<std::size_t>(f)] = quantize(enc.thresholds[static_cast<std::size_t>(f)], table(i, f));
            out.levels[i * static_cast<std::size_t>(table.D) + static_cast<std::size_t>(f)] = row[static_cast<std::size_t>(f)];
        }
        out.bitstrings.push_back(levels_to_bits(row, enc.B));
    }
    return out;
}

/// Exact empirical ⟨Z_β⟩ = (1/N) Σ_x χ_β(x); M = 0.
[[nodiscard]] inline CorrelatorVector data_correlators(const EncodedTable& data,
                                                       const ObservableBasis& basis) {
    if (data.n() != basis.n()) {
        throw ContractError("data_correlators: table has n=" + std::to_string(data.n()) +
                            ", basis has n=" + std::to_string(basis.n()));
    }
    if (data.N == 0) throw ContractError("data_correlators: empty table");
    std::vector<double> acc(basis.size(), 0.0);
    for (const auto& x : data.bitstrings) {
        for (std::size_t b = 0; b < basis.size(); ++b) acc[b] += parity_unchecked(basis[b], x) ? -1.0 : 1.0;
    }
    for (auto& v : acc) v /= static_cast<double>(data.N);
    return {basis.fingerprint(), std::move(acc), 0};
}

/// Level values as an N×D real table.
[[nodiscard]] inline std::vector<double> levels_as_reals(const EncodedTable& t) {
    return {t.levels.begin(), t.levels.end()};
}

struct FloorReport {
    double mae_rho = 0.0;
    std::size_t pairs_used = 0;
    std::size_t pairs_excluded = 0;
    PearsonMatrix raw;
    PearsonMatrix quantized;
};

/**
 * Encoding-fidelity floor: mean over f<g of |ρ(raw) − ρ(quantized levels)|.
 * A model that matches the data correlators exactly reproduces the quantized
 * Pearson matrix, so this is the MAE_ρ it attains against the continuous data.
 */
[[nodiscard]] inline FloorReport encoding_floor(const RawTable& raw, const EncodedTable& enc) {
    if (raw.N != enc.N || raw.D != enc.D) throw ContractError("encoding_floor: tables differ in shape");
    FloorReport r;
    r.raw = pearson_of_columns(raw.values, raw.N, raw.D);
    const auto lv = levels_as_reals(enc);
    r.quantized = pearson_of_columns(lv, enc.N, enc.D);
    double sum = 0.0;
    for (int f = 0; f < raw.D; ++f) {
        for (int g = f + 1; g < raw.D; ++g) {
            const double a = r.raw(f, g);
            const double b = r.quantized(f, g);
            if (std::isnan(a) || std::isnan(b)) {
                ++r.pairs_excluded;
                continue;
            }
            sum += std::abs(a - b);
            ++r.pairs_used;
        }
    }
    if (r.pairs_excluded > 0) {
        warn("encoding_floor: " + std::to_string(r.pairs_excluded) +
             " feature pair(s) excluded for zero variance");
    }
    r.mae_rho = r.pairs_used ? sum / static_cast<double>(r.pairs_used) : 0.0;
    return r;
}

}  // namespace iqpborn
