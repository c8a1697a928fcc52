// SPDX-License-Identifier: Apache-2.0

#include <Eigen/QR>
#include <cmath>
#include <limits>
#include <numbers>

#include "diva/tabletask.hpp"

namespace diva::task {

using lm::Vocab;

void CorruptionSpec::validate() const {
    if (!(content_noise_std >= 0.0) || !std::isfinite(content_noise_std))
        throw ConfigError("corruption: content_noise_std must be finite and >= 0");
    if (!(symbol_swap_prob >= 0.0 && symbol_swap_prob <= 1.0))
        throw ConfigError("corruption: symbol_swap_prob must lie in [0, 1]");
}

VisionEncoder::VisionEncoder(std::size_t d, std::uint64_t seed) : d_(d) {
    if (d == 0) throw ConfigError("vision encoder: d must be positive");
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> normal(0.0, 1.0);
    symbols_.resize(Vocab::alphabet().size());
    for (auto& s : symbols_) {
        s.resize(kSymbolDims);
        for (double& x : s) x = normal(rng);
    }

    // Fixed projection with orthonormal rows (raw <= d) or columns (raw > d),
    // so the map is injective whenever d >= raw_dims.
    const auto raw = static_cast<Eigen::Index>(raw_dims());
    const auto dd = static_cast<Eigen::Index>(d);
    Eigen::MatrixXd g(std::max(raw, dd), std::min(raw, dd));
    for (Eigen::Index i = 0; i < g.rows(); ++i)
        for (Eigen::Index j = 0; j < g.cols(); ++j) g(i, j) = normal(rng);
    Eigen::HouseholderQR<Eigen::MatrixXd> qr(g);
    Eigen::MatrixXd q = qr.householderQ() * Eigen::MatrixXd::Identity(g.rows(), g.cols());
    Eigen::MatrixXd p = raw <= dd ? Eigen::MatrixXd(q.transpose()) : q;  // raw x d

    std::vector<double> flat(static_cast<std::size_t>(raw * dd));
    for (Eigen::Index i = 0; i < raw; ++i)
        for (Eigen::Index j = 0; j < dd; ++j) flat[static_cast<std::size_t>(i * dd + j)] = p(i, j);
    projection_ = Tensor::matrix(raw_dims(), d, std::move(flat));
}

std::vector<double> VisionEncoder::position_code(int index) const {
    // Periods 4, 8, 16, 32: distinct codes for every index in 1..32.
    std::vector<double> out(kPosDimsPerAxis);
    for (std::size_t k = 0; k < kPosDimsPerAxis / 2; ++k) {
        const double w = 2.0 * std::numbers::pi / static_cast<double>(4u << k);
        out[2 * k] = std::sin(w * index);
        out[2 * k + 1] = std::cos(w * index);
    }
    return out;
}

std::vector<double> VisionEncoder::content_code(const std::string& value) const {
    if (value.size() > kSlots)
        throw DimensionError("content_code: cell '" + value + "' longer than " +
                             std::to_string(kSlots) + " symbols");
    std::vector<double> out(kSlots * kSymbolDims, 0.0);
    const std::string& alpha = Vocab::alphabet();
    for (std::size_t s = 0; s < value.size(); ++s) {
        const auto k = alpha.find(value[s]);
        if (k == std::string::npos)
            throw DimensionError(std::string("content_code: symbol '") + value[s] +
                                 "' outside the cell alphabet");
        std::copy(symbols_[k].begin(), symbols_[k].end(),
                  out.begin() + static_cast<std::ptrdiff_t>(s * kSymbolDims));
    }
    return out;
}

char VisionEncoder::nearest_symbol(std::span<const double> content) const {
    if (content.size() < kSymbolDims) throw DimensionError("nearest_symbol: content too short");
    std::size_t best = 0;
    double best_d = std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k < symbols_.size(); ++k) {
        double dist = 0.0;
        for (std::size_t j = 0; j < kSymbolDims; ++j) {
            const double e = content[j] - symbols_[k][j];
            dist += e * e;
        }
        if (dist < best_d) {
            best_d = dist;
            best = k;
        }
    }
    return Vocab::alphabet()[best];
}

VisualGrid VisionEncoder::encode(const Table& table, const CorruptionSpec& spec,
                                 std::uint64_t seed) const {
    spec.validate();
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> noise(0.0, 1.0);
    std::bernoulli_distribution swap(spec.symbol_swap_prob);
    std::uniform_int_distribution<std::size_t> pick(0, Vocab::alphabet().size() - 1);

    VisualGrid g;
    g.rows = table.rows;
    g.cols = table.cols;
    const std::size_t width = raw_dims();
    std::vector<double> raw(g.n() * width, 0.0);
    g.swapped.assign(g.n(), false);

    for (int r = 0; r < table.rows; ++r) {
        for (int c = 0; c < table.cols; ++c) {
            const std::size_t cell = static_cast<std::size_t>(r * table.cols + c);
            double* row = raw.data() + cell * width;
            const auto pr = position_code(r + 1), pc = position_code(c + 1);
            std::copy(pr.begin(), pr.end(), row);
            std::copy(pc.begin(), pc.end(), row + kPosDimsPerAxis);

            // A swapped cell shows a random string of the same length. The
            // draws happen for every cell so the stream layout is fixed.
            std::string shown = table.cell(r, c);
            const bool swapped = swap(rng);
            std::string replacement(shown.size(), ' ');
            for (char& ch : replacement) ch = Vocab::alphabet()[pick(rng)];
            if (swapped) shown = replacement;
            g.swapped[cell] = swapped;

            const auto content = content_code(shown);
            for (std::size_t j = 0; j < content.size(); ++j) {
                const double e = noise(rng);
                row[content_offset() + j] =
                    content[j] + (j < shown.size() * kSymbolDims ? spec.content_noise_std * e : 0.0);
            }
        }
    }
    g.raw = Tensor::matrix(g.n(), width, std::move(raw));
    g.features = matmul(g.raw, projection_);
    return g;
}

VisualGrid encode_vision(const Table& table, const CorruptionSpec& spec, std::uint64_t seed,
                         const VisionEncoder& encoder) {
    return encoder.encode(table, spec, seed);
}

}  // namespace diva::task
