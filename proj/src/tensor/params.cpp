// SPDX-License-Identifier: Apache-2.0

#include "diva/params.hpp"

#include <cmath>
#include <cstring>
#include <iomanip>
#include <sstream>

namespace diva {

namespace {

constexpr std::uint64_t kFnvOffset = 1469598103934665603ULL;
constexpr std::uint64_t kFnvPrime = 1099511628211ULL;

void fnv_bytes(std::uint64_t& h, const void* data, std::size_t n) {
    const auto* p = static_cast<const unsigned char*>(data);
    for (std::size_t i = 0; i < n; ++i) {
        h ^= p[i];
        h *= kFnvPrime;
    }
}

}  // namespace

Tensor ParameterSet::add(std::string name, Tensor tensor) {
    if (contains(name)) throw ConfigError("duplicate parameter name: " + name);
    items_.push_back({std::move(name), tensor});
    return tensor;
}

const Tensor& ParameterSet::get(const std::string& name) const {
    for (const auto& p : items_)
        if (p.name == name) return p.tensor;
    throw ConfigError("unknown parameter: " + name);
}

bool ParameterSet::contains(const std::string& name) const {
    for (const auto& p : items_)
        if (p.name == name) return true;
    return false;
}

std::size_t ParameterSet::scalar_count() const {
    std::size_t n = 0;
    for (const auto& p : items_) n += p.tensor.size();
    return n;
}

void ParameterSet::zero_grad() {
    for (auto& p : items_) p.tensor.zero_grad();
}

void ParameterSet::set_requires_grad(bool flag) {
    for (auto& p : items_) p.tensor.set_requires_grad(flag);
}

ParameterSet ParameterSet::clone() const {
    ParameterSet out;
    for (const auto& p : items_) out.items_.push_back({p.name, p.tensor.detach(p.tensor.requires_grad())});
    return out;
}

bool ParameterSet::bitwise_equal(const ParameterSet& other) const {
    if (items_.size() != other.items_.size()) return false;
    for (std::size_t i = 0; i < items_.size(); ++i) {
        if (items_[i].name != other.items_[i].name) return false;
        if (!items_[i].tensor.bitwise_equal(other.items_[i].tensor)) return false;
    }
    return true;
}

void ParameterSet::assign_from(const ParameterSet& other) {
    if (items_.size() != other.items_.size())
        throw DimensionError("assign_from: parameter count " + std::to_string(items_.size()) +
                             " vs " + std::to_string(other.items_.size()));
    for (std::size_t i = 0; i < items_.size(); ++i) {
        const auto& src = other.items_[i];
        auto& dst = items_[i];
        if (src.name != dst.name || src.tensor.shape() != dst.tensor.shape())
            throw DimensionError("assign_from: " + dst.name + shape_str(dst.tensor.shape()) +
                                 " vs " + src.name + shape_str(src.tensor.shape()));
        auto out = dst.tensor.mutable_data();
        std::copy(src.tensor.data().begin(), src.tensor.data().end(), out.begin());
    }
}

std::uint64_t ParameterSet::hash() const {
    std::uint64_t h = kFnvOffset;
    for (const auto& p : items_) {
        fnv_bytes(h, p.name.data(), p.name.size());
        for (std::size_t dim : p.tensor.shape()) {
            const std::uint64_t v = dim;
            fnv_bytes(h, &v, sizeof v);
        }
        fnv_bytes(h, p.tensor.data().data(), p.tensor.size() * sizeof(double));
    }
    return h;
}

std::string hash_hex(std::uint64_t h) {
    std::ostringstream os;
    os << std::hex << std::setw(16) << std::setfill('0') << h;
    return os.str();
}

AdamState make_adam(const ParameterSet& params, double lr) {
    AdamState s;
    s.lr = lr;
    for (const auto& p : params.items()) {
        s.first_moment.emplace_back(p.tensor.size(), 0.0);
        s.second_moment.emplace_back(p.tensor.size(), 0.0);
    }
    return s;
}

void adam_step(ParameterSet& params, AdamState& state) {
    if (state.first_moment.size() != params.size())
        throw DimensionError("adam_step: state tracks " + std::to_string(state.first_moment.size()) +
                             " parameters, set has " + std::to_string(params.size()));
    for (const auto& p : params.items())
        if (!p.tensor.has_grad()) throw NumericError("adam_step: missing gradient for " + p.name);

    ++state.step;
    const double bc1 = 1.0 - std::pow(state.beta1, static_cast<double>(state.step));
    const double bc2 = 1.0 - std::pow(state.beta2, static_cast<double>(state.step));
    for (std::size_t k = 0; k < params.size(); ++k) {
        auto& p = params.items()[k];
        auto& m = state.first_moment[k];
        auto& v = state.second_moment[k];
        if (m.size() != p.tensor.size())
            throw DimensionError("adam_step: moment buffer shape mismatch for " + p.name);
        const auto g = p.tensor.grad();
        auto w = p.tensor.mutable_data();
        for (std::size_t i = 0; i < w.size(); ++i) {
            m[i] = state.beta1 * m[i] + (1.0 - state.beta1) * g[i];
            v[i] = state.beta2 * v[i] + (1.0 - state.beta2) * g[i] * g[i];
            const double mhat = m[i] / bc1;
            const double vhat = v[i] / bc2;
            w[i] -= state.lr * mhat / (std::sqrt(vhat) + state.eps);
        }
    }
}

double grad_norm_sq(const ParameterSet& params) {
    double s = 0.0;
    for (const auto& p : params.items())
        for (double g : p.tensor.grad()) s += g * g;
    return s;
}

void scale_grads(ParameterSet& params, double c) {
    for (auto& p : params.items()) {
        if (!p.tensor.has_grad()) continue;
        for (double& g : p.tensor.mutable_grad()) g *= c;
    }
}

Tensor finite_diff_grad(const std::function<double(const Tensor&)>& f, Tensor& x, double h) {
    if (!(h > 0.0)) throw NumericError("finite_diff_grad: step must be positive");
    std::vector<double> out(x.size());
    auto w = x.mutable_data();
    for (std::size_t i = 0; i < w.size(); ++i) {
        const double orig = w[i];
        w[i] = orig + h;
        const double fp = f(x);
        w[i] = orig - h;
        const double fm = f(x);
        w[i] = orig;
        if (!std::isfinite(fp) || !std::isfinite(fm))
            throw NumericError("finite_diff_grad: non-finite objective at coordinate " +
                               std::to_string(i));
        out[i] = (fp - fm) / (2.0 * h);
    }
    return Tensor::from(x.shape(), std::move(out));
}

}  // namespace diva
