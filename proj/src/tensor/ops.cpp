// SPDX-License-Identifier: Apache-2.0

#include <algorithm>
#include <cmath>
#include <limits>

#include "diva/tensor.hpp"
#include "gemm.hpp"

namespace diva {

namespace {

using detail::Node;

void require_same_shape(const Tensor& a, const Tensor& b, const char* op) {
    if (a.rows() != b.rows() || a.cols() != b.cols())
        throw DimensionError(std::string(op) + ": shape mismatch " + shape_str(a.shape()) +
                             " vs " + shape_str(b.shape()));
}

Shape matrix_shape(std::size_t r, std::size_t c) { return {r, c}; }

bool wants_grad(const Node& n, std::size_t i) { return n.inputs[i]->requires_grad; }

std::vector<double>& input_grad(Node& n, std::size_t i) { return n.inputs[i]->grad_buffer(); }

const std::vector<double>& input_value(const Node& n, std::size_t i) {
    return n.inputs[i]->value;
}

}  // namespace

Tensor matmul(const Tensor& a, const Tensor& b) {
    const std::size_t p = a.rows(), q = a.cols(), r = b.cols();
    if (b.rows() != q)
        throw DimensionError("matmul: inner dimensions disagree, " + shape_str(a.shape()) +
                             " x " + shape_str(b.shape()));
    std::vector<double> out(p * r, 0.0);
    kernels::gemm_nn(p, q, r, a.data().data(), b.data().data(), out.data());
    return Tensor::make_result(matrix_shape(p, r), std::move(out), {a, b}, [p, q, r](Node& n) {
        if (wants_grad(n, 0))
            kernels::gemm_nt(p, r, q, n.grad.data(), input_value(n, 1).data(),
                             input_grad(n, 0).data());
        if (wants_grad(n, 1))
            kernels::gemm_tn(q, p, r, input_value(n, 0).data(), n.grad.data(),
                             input_grad(n, 1).data());
    });
}

Tensor matmul_nt(const Tensor& a, const Tensor& b) {
    const std::size_t p = a.rows(), q = a.cols(), r = b.rows();
    if (b.cols() != q)
        throw DimensionError("matmul_nt: inner dimensions disagree, " + shape_str(a.shape()) +
                             " x " + shape_str(b.shape()) + "^T");
    std::vector<double> out(p * r, 0.0);
    kernels::gemm_nt(p, q, r, a.data().data(), b.data().data(), out.data());
    return Tensor::make_result(matrix_shape(p, r), std::move(out), {a, b}, [p, q, r](Node& n) {
        if (wants_grad(n, 0))
            kernels::gemm_nn(p, r, q, n.grad.data(), input_value(n, 1).data(),
                             input_grad(n, 0).data());
        if (wants_grad(n, 1))
            kernels::gemm_tn(r, p, q, n.grad.data(), input_value(n, 0).data(),
                             input_grad(n, 1).data());
    });
}

Tensor add(const Tensor& a, const Tensor& b) {
    require_same_shape(a, b, "add");
    std::vector<double> out(a.size());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = a.data()[i] + b.data()[i];
    return Tensor::make_result(a.shape(), std::move(out), {a, b}, [](Node& n) {
        for (std::size_t k = 0; k < 2; ++k) {
            if (!wants_grad(n, k)) continue;
            auto& g = input_grad(n, k);
            for (std::size_t i = 0; i < g.size(); ++i) g[i] += n.grad[i];
        }
    });
}

Tensor sub(const Tensor& a, const Tensor& b) {
    require_same_shape(a, b, "sub");
    std::vector<double> out(a.size());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = a.data()[i] - b.data()[i];
    return Tensor::make_result(a.shape(), std::move(out), {a, b}, [](Node& n) {
        if (wants_grad(n, 0)) {
            auto& g = input_grad(n, 0);
            for (std::size_t i = 0; i < g.size(); ++i) g[i] += n.grad[i];
        }
        if (wants_grad(n, 1)) {
            auto& g = input_grad(n, 1);
            for (std::size_t i = 0; i < g.size(); ++i) g[i] -= n.grad[i];
        }
    });
}

Tensor add_row(const Tensor& x, const Tensor& bias) {
    const std::size_t p = x.rows(), q = x.cols();
    if (bias.size() != q)
        throw DimensionError("add_row: bias " + shape_str(bias.shape()) + " vs input " +
                             shape_str(x.shape()));
    std::vector<double> out(x.data().begin(), x.data().end());
    for (std::size_t i = 0; i < p; ++i)
        for (std::size_t j = 0; j < q; ++j) out[i * q + j] += bias.data()[j];
    return Tensor::make_result(x.shape(), std::move(out), {x, bias}, [p, q](Node& n) {
        if (wants_grad(n, 0)) {
            auto& g = input_grad(n, 0);
            for (std::size_t i = 0; i < g.size(); ++i) g[i] += n.grad[i];
        }
        if (wants_grad(n, 1)) {
            auto& g = input_grad(n, 1);
            for (std::size_t i = 0; i < p; ++i)
                for (std::size_t j = 0; j < q; ++j) g[j] += n.grad[i * q + j];
        }
    });
}

Tensor scale(const Tensor& x, double c) {
    std::vector<double> out(x.size());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = x.data()[i] * c;
    return Tensor::make_result(x.shape(), std::move(out), {x}, [c](Node& n) {
        auto& g = input_grad(n, 0);
        for (std::size_t i = 0; i < g.size(); ++i) g[i] += c * n.grad[i];
    });
}

Tensor mul_scalar(const Tensor& x, const Tensor& s) {
    if (s.size() != 1)
        throw DimensionError("mul_scalar: scale must have one element, got " +
                             shape_str(s.shape()));
    const double c = s.data()[0];
    std::vector<double> out(x.size());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = x.data()[i] * c;
    return Tensor::make_result(x.shape(), std::move(out), {x, s}, [](Node& n) {
        const double c = input_value(n, 1)[0];
        if (wants_grad(n, 0)) {
            auto& g = input_grad(n, 0);
            for (std::size_t i = 0; i < g.size(); ++i) g[i] += c * n.grad[i];
        }
        if (wants_grad(n, 1)) {
            const auto& xv = input_value(n, 0);
            double acc = 0.0;
            for (std::size_t i = 0; i < xv.size(); ++i) acc += n.grad[i] * xv[i];
            input_grad(n, 1)[0] += acc;
        }
    });
}

namespace {

Tensor softmax_impl(const Tensor& x, bool causal, std::ptrdiff_t offset) {
    const std::size_t p = x.rows(), q = x.cols();
    std::vector<double> out(p * q, 0.0);
    const auto in = x.data();
    for (std::size_t i = 0; i < p; ++i) {
        std::size_t limit = q;
        if (causal) {
            const std::ptrdiff_t last = static_cast<std::ptrdiff_t>(i) + offset;
            limit = last < 0 ? 0 : std::min<std::size_t>(q, static_cast<std::size_t>(last) + 1);
        }
        if (limit == 0) continue;
        const double* row = in.data() + i * q;
        double m = -std::numeric_limits<double>::infinity();
        for (std::size_t j = 0; j < limit; ++j) {
            if (std::isnan(row[j]))
                throw NumericError("softmax_rows: NaN input at (" + std::to_string(i) + "," +
                                   std::to_string(j) + ")");
            m = std::max(m, row[j]);
        }
        double z = 0.0;
        double* o = out.data() + i * q;
        for (std::size_t j = 0; j < limit; ++j) {
            o[j] = std::exp(row[j] - m);
            z += o[j];
        }
        const double inv = 1.0 / z;
        for (std::size_t j = 0; j < limit; ++j) o[j] *= inv;
    }
    return Tensor::make_result(x.shape(), std::move(out), {x}, [p, q](Node& n) {
        auto& g = input_grad(n, 0);
        const auto& y = n.value;
        for (std::size_t i = 0; i < p; ++i) {
            const double* yi = y.data() + i * q;
            const double* dy = n.grad.data() + i * q;
            double dot = 0.0;
            for (std::size_t j = 0; j < q; ++j) dot += yi[j] * dy[j];
            double* gi = g.data() + i * q;
            for (std::size_t j = 0; j < q; ++j) gi[j] += yi[j] * (dy[j] - dot);
        }
    });
}

}  // namespace

Tensor softmax_rows(const Tensor& x) { return softmax_impl(x, false, 0); }

Tensor causal_softmax_rows(const Tensor& x, std::ptrdiff_t offset) {
    return softmax_impl(x, true, offset);
}

Tensor layer_norm(const Tensor& x, const Tensor& gain, const Tensor& bias, double eps) {
    const std::size_t p = x.rows(), d = x.cols();
    if (d < 2) throw DimensionError("layer_norm: need at least 2 columns, got " +
                                    shape_str(x.shape()));
    if (gain.size() != d || bias.size() != d)
        throw DimensionError("layer_norm: affine " + shape_str(gain.shape()) + "/" +
                             shape_str(bias.shape()) + " vs input " + shape_str(x.shape()));
    std::vector<double> out(p * d);
    std::vector<double> xhat(p * d);
    std::vector<double> inv_std(p);
    const auto in = x.data();
    const auto gv = gain.data();
    const auto bv = bias.data();
    for (std::size_t i = 0; i < p; ++i) {
        const double* row = in.data() + i * d;
        double mu = 0.0;
        for (std::size_t j = 0; j < d; ++j) mu += row[j];
        mu /= static_cast<double>(d);
        double var = 0.0;
        for (std::size_t j = 0; j < d; ++j) var += (row[j] - mu) * (row[j] - mu);
        var /= static_cast<double>(d);
        const double inv = 1.0 / std::sqrt(var + eps);
        inv_std[i] = inv;
        for (std::size_t j = 0; j < d; ++j) {
            const double h = (row[j] - mu) * inv;
            xhat[i * d + j] = h;
            out[i * d + j] = h * gv[j] + bv[j];
        }
    }
    return Tensor::make_result(
        x.shape(), std::move(out), {x, gain, bias},
        [p, d, xhat = std::move(xhat), inv_std = std::move(inv_std)](Node& n) {
            const auto& gv = input_value(n, 1);
            if (wants_grad(n, 0)) {
                auto& gx = input_grad(n, 0);
                std::vector<double> dh(d);
                for (std::size_t i = 0; i < p; ++i) {
                    const double* dy = n.grad.data() + i * d;
                    const double* h = xhat.data() + i * d;
                    double mean_dh = 0.0, mean_dh_h = 0.0;
                    for (std::size_t j = 0; j < d; ++j) {
                        dh[j] = dy[j] * gv[j];
                        mean_dh += dh[j];
                        mean_dh_h += dh[j] * h[j];
                    }
                    mean_dh /= static_cast<double>(d);
                    mean_dh_h /= static_cast<double>(d);
                    for (std::size_t j = 0; j < d; ++j)
                        gx[i * d + j] += inv_std[i] * (dh[j] - mean_dh - h[j] * mean_dh_h);
                }
            }
            if (wants_grad(n, 1)) {
                auto& gg = input_grad(n, 1);
                for (std::size_t i = 0; i < p; ++i)
                    for (std::size_t j = 0; j < d; ++j)
                        gg[j] += n.grad[i * d + j] * xhat[i * d + j];
            }
            if (wants_grad(n, 2)) {
                auto& gb = input_grad(n, 2);
                for (std::size_t i = 0; i < p; ++i)
                    for (std::size_t j = 0; j < d; ++j) gb[j] += n.grad[i * d + j];
            }
        });
}

Tensor gelu(const Tensor& x) {
    constexpr double k = 0.7978845608028654;  // sqrt(2/pi)
    constexpr double c = 0.044715;
    std::vector<double> out(x.size());
    const auto in = x.data();
    for (std::size_t i = 0; i < out.size(); ++i) {
        const double v = in[i];
        out[i] = 0.5 * v * (1.0 + std::tanh(k * (v + c * v * v * v)));
    }
    return Tensor::make_result(x.shape(), std::move(out), {x}, [](Node& n) {
        const auto& xv = input_value(n, 0);
        auto& g = input_grad(n, 0);
        for (std::size_t i = 0; i < g.size(); ++i) {
            const double v = xv[i];
            const double t = std::tanh(k * (v + c * v * v * v));
            const double dt = (1.0 - t * t) * k * (1.0 + 3.0 * c * v * v);
            g[i] += n.grad[i] * (0.5 * (1.0 + t) + 0.5 * v * dt);
        }
    });
}

Tensor concat_rows(const std::vector<Tensor>& parts) {
    if (parts.empty()) throw DimensionError("concat_rows: no inputs");
    const std::size_t d = parts.front().cols();
    std::size_t total = 0;
    for (const auto& t : parts) {
        if (t.cols() != d)
            throw DimensionError("concat_rows: column mismatch " +
                                 shape_str(parts.front().shape()) + " vs " +
                                 shape_str(t.shape()));
        total += t.rows();
    }
    std::vector<double> out;
    out.reserve(total * d);
    std::vector<std::size_t> offsets;
    for (const auto& t : parts) {
        offsets.push_back(out.size());
        out.insert(out.end(), t.data().begin(), t.data().end());
    }
    return Tensor::make_result(matrix_shape(total, d), std::move(out), parts,
                               [offsets = std::move(offsets)](Node& n) {
                                   for (std::size_t k = 0; k < n.inputs.size(); ++k) {
                                       if (!wants_grad(n, k)) continue;
                                       auto& g = input_grad(n, k);
                                       const double* src = n.grad.data() + offsets[k];
                                       for (std::size_t i = 0; i < g.size(); ++i) g[i] += src[i];
                                   }
                               });
}

Tensor slice_rows(const Tensor& x, std::size_t begin, std::size_t end) {
    if (begin > end || end > x.rows())
        throw DimensionError("slice_rows: [" + std::to_string(begin) + "," +
                             std::to_string(end) + ") out of " + shape_str(x.shape()));
    const std::size_t d = x.cols();
    std::vector<double> out(x.data().begin() + static_cast<std::ptrdiff_t>(begin * d),
                            x.data().begin() + static_cast<std::ptrdiff_t>(end * d));
    return Tensor::make_result(matrix_shape(end - begin, d), std::move(out), {x},
                               [begin, d](Node& n) {
                                   auto& g = input_grad(n, 0);
                                   double* dst = g.data() + begin * d;
                                   for (std::size_t i = 0; i < n.grad.size(); ++i)
                                       dst[i] += n.grad[i];
                               });
}

Tensor concat_cols(const std::vector<Tensor>& parts) {
    if (parts.empty()) throw DimensionError("concat_cols: no inputs");
    const std::size_t p = parts.front().rows();
    std::size_t total = 0;
    std::vector<std::size_t> offsets;
    for (const auto& t : parts) {
        if (t.rows() != p)
            throw DimensionError("concat_cols: row mismatch " +
                                 shape_str(parts.front().shape()) + " vs " +
                                 shape_str(t.shape()));
        offsets.push_back(total);
        total += t.cols();
    }
    std::vector<double> out(p * total);
    for (std::size_t k = 0; k < parts.size(); ++k) {
        const std::size_t w = parts[k].cols();
        const auto src = parts[k].data();
        for (std::size_t i = 0; i < p; ++i)
            std::copy_n(src.data() + i * w, w, out.data() + i * total + offsets[k]);
    }
    return Tensor::make_result(matrix_shape(p, total), std::move(out), parts,
                               [p, total, offsets = std::move(offsets)](Node& n) {
                                   for (std::size_t k = 0; k < n.inputs.size(); ++k) {
                                       if (!wants_grad(n, k)) continue;
                                       auto& g = input_grad(n, k);
                                       const std::size_t w = g.size() / std::max<std::size_t>(p, 1);
                                       for (std::size_t i = 0; i < p; ++i)
                                           for (std::size_t j = 0; j < w; ++j)
                                               g[i * w + j] += n.grad[i * total + offsets[k] + j];
                                   }
                               });
}

Tensor slice_cols(const Tensor& x, std::size_t begin, std::size_t end) {
    const std::size_t p = x.rows(), q = x.cols();
    if (begin > end || end > q)
        throw DimensionError("slice_cols: [" + std::to_string(begin) + "," +
                             std::to_string(end) + ") out of " + shape_str(x.shape()));
    const std::size_t w = end - begin;
    std::vector<double> out(p * w);
    const auto src = x.data();
    for (std::size_t i = 0; i < p; ++i)
        std::copy_n(src.data() + i * q + begin, w, out.data() + i * w);
    return Tensor::make_result(matrix_shape(p, w), std::move(out), {x}, [p, q, w, begin](Node& n) {
        auto& g = input_grad(n, 0);
        for (std::size_t i = 0; i < p; ++i)
            for (std::size_t j = 0; j < w; ++j) g[i * q + begin + j] += n.grad[i * w + j];
    });
}

Tensor gather_rows(const Tensor& table, std::span<const int> ids) {
    const std::size_t vocab = table.rows(), d = table.cols();
    std::vector<double> out(ids.size() * d);
    for (std::size_t i = 0; i < ids.size(); ++i) {
        if (ids[i] < 0 || static_cast<std::size_t>(ids[i]) >= vocab)
            throw DimensionError("gather_rows: id " + std::to_string(ids[i]) +
                                 " outside table of " + std::to_string(vocab) + " rows");
        std::copy_n(table.data().data() + static_cast<std::size_t>(ids[i]) * d, d,
                    out.data() + i * d);
    }
    std::vector<int> idx(ids.begin(), ids.end());
    return Tensor::make_result(matrix_shape(ids.size(), d), std::move(out), {table},
                               [d, idx = std::move(idx)](Node& n) {
                                   auto& g = input_grad(n, 0);
                                   for (std::size_t i = 0; i < idx.size(); ++i) {
                                       double* dst = g.data() + static_cast<std::size_t>(idx[i]) * d;
                                       for (std::size_t j = 0; j < d; ++j)
                                           dst[j] += n.grad[i * d + j];
                                   }
                               });
}

Tensor sum(const Tensor& x) {
    double s = 0.0;
    for (double v : x.data()) s += v;
    return Tensor::make_result({1}, {s}, {x}, [](Node& n) {
        auto& g = input_grad(n, 0);
        for (auto& v : g) v += n.grad[0];
    });
}

Tensor mean(const Tensor& x) {
    if (x.empty()) throw DimensionError("mean of empty tensor");
    return scale(sum(x), 1.0 / static_cast<double>(x.size()));
}

Tensor cross_entropy_logits(const Tensor& logits, std::span<const int> targets,
                            const std::vector<bool>& mask) {
    const std::size_t t = logits.rows(), v = logits.cols();
    if (targets.size() != t || mask.size() != t)
        throw DimensionError("cross_entropy_logits: " + std::to_string(targets.size()) +
                             " targets / " + std::to_string(mask.size()) + " mask for logits " +
                             shape_str(logits.shape()));
    std::size_t count = 0;
    for (std::size_t i = 0; i < t; ++i) {
        if (!mask[i]) continue;
        if (targets[i] < 0 || static_cast<std::size_t>(targets[i]) >= v)
            throw DimensionError("cross_entropy_logits: target id " + std::to_string(targets[i]) +
                                 " outside vocab of " + std::to_string(v));
        ++count;
    }
    if (count == 0) throw NumericError("cross_entropy_logits: every position is masked");

    const auto in = logits.data();
    std::vector<double> probs(t * v, 0.0);
    double total = 0.0;
    for (std::size_t i = 0; i < t; ++i) {
        if (!mask[i]) continue;
        const double* row = in.data() + i * v;
        const double m = *std::max_element(row, row + v);
        double z = 0.0;
        for (std::size_t j = 0; j < v; ++j) z += std::exp(row[j] - m);
        const double lse = m + std::log(z);
        total += lse - row[targets[i]];
        for (std::size_t j = 0; j < v; ++j) probs[i * v + j] = std::exp(row[j] - lse);
    }
    const double inv = 1.0 / static_cast<double>(count);
    std::vector<int> tg(targets.begin(), targets.end());
    return Tensor::make_result(
        {1}, {total * inv}, {logits},
        [t, v, inv, mask, tg = std::move(tg), probs = std::move(probs)](Node& n) {
            auto& g = input_grad(n, 0);
            const double s = n.grad[0] * inv;
            for (std::size_t i = 0; i < t; ++i) {
                if (!mask[i]) continue;
                for (std::size_t j = 0; j < v; ++j) g[i * v + j] += s * probs[i * v + j];
                g[i * v + static_cast<std::size_t>(tg[i])] -= s;
            }
        });
}

}  // namespace diva
