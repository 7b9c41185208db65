#include "hype/ops.hpp"

#include <Eigen/Core>
#include <algorithm>
#include <cmath>
#include <numbers>

#include "hype/errors.hpp"

namespace hype::ops {

namespace {

using RowMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using ConstMap = Eigen::Map<const RowMat>;
using MutMap = Eigen::Map<RowMat>;
using detail::TensorNode;

constexpr double kMaskedScore = -1e9;

ConstMap view(const Buffer& v, std::size_t rows, std::size_t cols, std::size_t offset = 0) {
    return ConstMap(v.data() + offset, static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
}

MutMap view(Buffer& v, std::size_t rows, std::size_t cols, std::size_t offset = 0) {
    return MutMap(v.data() + offset, static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
}

void require_rank(const Tensor& t, std::size_t rank, const char* op) {
    if (t.rank() != rank) {
        throw DimensionError(std::string(op) + ": expected rank " + std::to_string(rank) + ", got " +
                             shape_str(t.shape()));
    }
}

void require_same_shape(const Tensor& a, const Tensor& b, const char* op) {
    if (a.shape() != b.shape()) {
        throw DimensionError(std::string(op) + ": shape mismatch " + shape_str(a.shape()) + " vs " +
                             shape_str(b.shape()));
    }
}

bool wants_grad(const TensorNode& self, std::size_t i) { return self.parents[i]->requires_grad; }

}  // namespace

Tensor matmul(const Tensor& a, const Tensor& b) {
    require_rank(a, 2, "matmul");
    require_rank(b, 2, "matmul");
    const std::size_t m = a.dim(0), k = a.dim(1), n = b.dim(1);
    if (b.dim(0) != k) {
        throw DimensionError("matmul: inner dimensions differ, " + shape_str(a.shape()) + " x " +
                             shape_str(b.shape()));
    }
    Buffer out(m * n);
    view(out, m, n).noalias() = view(a.node()->data, m, k) * view(b.node()->data, k, n);
    return detail::make_result({m, n}, std::move(out), {a, b}, [m, k, n](TensorNode& self) {
        auto dc = view(std::as_const(self.grad), m, n);
        if (wants_grad(self, 0)) {
            auto& pa = *self.parents[0];
            view(pa.ensure_grad(), m, k).noalias() += dc * view(self.parents[1]->data, k, n).transpose();
        }
        if (wants_grad(self, 1)) {
            auto& pb = *self.parents[1];
            view(pb.ensure_grad(), k, n).noalias() += view(self.parents[0]->data, m, k).transpose() * dc;
        }
    });
}

namespace {

// out[r] += s * row, length n
inline void axpy(double s, const double* row, double* out, std::size_t n) {
    for (std::size_t j = 0; j < n; ++j) out[j] += s * row[j];
}

inline double dot(const double* x, const double* y, std::size_t n) {
    double acc = 0.0;
    for (std::size_t j = 0; j < n; ++j) acc += x[j] * y[j];
    return acc;
}

}  // namespace

// Per-head blocks are tiny, so plain row loops beat the blocked GEMM path.
Tensor bmm(const Tensor& a, const Tensor& b, bool transpose_b) {
    require_rank(a, 3, "bmm");
    require_rank(b, 3, "bmm");
    const std::size_t batch = a.dim(0), m = a.dim(1), k = a.dim(2);
    const std::size_t n = transpose_b ? b.dim(1) : b.dim(2);
    const std::size_t bk = transpose_b ? b.dim(2) : b.dim(1);
    if (b.dim(0) != batch || bk != k) {
        throw DimensionError("bmm: incompatible shapes " + shape_str(a.shape()) + " x " + shape_str(b.shape()) +
                             (transpose_b ? " (transposed)" : ""));
    }
    Buffer out(batch * m * n);
    const double* ad = a.node()->data.data();
    const double* bd = b.node()->data.data();
    for (std::size_t i = 0; i < batch; ++i) {
        const double* A = ad + i * m * k;
        const double* B = bd + i * k * n;
        double* C = out.data() + i * m * n;
        for (std::size_t r = 0; r < m; ++r) {
            if (transpose_b) {
                // B stored [n x k]
                for (std::size_t c = 0; c < n; ++c) C[r * n + c] = dot(A + r * k, B + c * k, k);
            } else {
                std::fill_n(C + r * n, n, 0.0);
                for (std::size_t j = 0; j < k; ++j) axpy(A[r * k + j], B + j * n, C + r * n, n);
            }
        }
    }
    return detail::make_result({batch, m, n}, std::move(out), {a, b}, [batch, m, k, n, transpose_b](TensorNode& self) {
        const double* ad = self.parents[0]->data.data();
        const double* bd = self.parents[1]->data.data();
        double* da = wants_grad(self, 0) ? self.parents[0]->ensure_grad().data() : nullptr;
        double* db = wants_grad(self, 1) ? self.parents[1]->ensure_grad().data() : nullptr;
        for (std::size_t i = 0; i < batch; ++i) {
            const double* dC = self.grad.data() + i * m * n;
            const double* A = ad + i * m * k;
            const double* B = bd + i * k * n;
            for (std::size_t r = 0; r < m; ++r) {
                for (std::size_t c = 0; c < n; ++c) {
                    const double g = dC[r * n + c];
                    if (transpose_b) {
                        if (da) axpy(g, B + c * k, da + i * m * k + r * k, k);
                        if (db) axpy(g, A + r * k, db + i * k * n + c * k, k);
                    }
                }
                if (!transpose_b) {
                    for (std::size_t j = 0; j < k; ++j) {
                        if (da) da[i * m * k + r * k + j] += dot(dC + r * n, B + j * n, n);
                        if (db) axpy(A[r * k + j], dC + r * n, db + i * k * n + j * n, n);
                    }
                }
            }
        }
    });
}

Tensor linear(const Tensor& x, const Tensor& w, const Tensor& bias) {
    require_rank(w, 2, "linear");
    require_rank(bias, 1, "linear");
    if (x.rank() < 1) throw DimensionError("linear: input must have rank >= 1");
    const std::size_t k = w.dim(0), n = w.dim(1);
    if (x.shape().back() != k || bias.dim(0) != n) {
        throw DimensionError("linear: input " + shape_str(x.shape()) + " incompatible with weight " +
                             shape_str(w.shape()) + " and bias " + shape_str(bias.shape()));
    }
    const std::size_t rows = x.numel() / k;
    Shape out_shape = x.shape();
    out_shape.back() = n;
    Buffer out(rows * n);
    auto Y = view(out, rows, n);
    Y.noalias() = view(x.node()->data, rows, k) * view(w.node()->data, k, n);
    Y.rowwise() += Eigen::Map<const Eigen::RowVectorXd>(bias.node()->data.data(), static_cast<Eigen::Index>(n));
    return detail::make_result(std::move(out_shape), std::move(out), {x, w, bias}, [rows, k, n](TensorNode& self) {
        auto dY = view(std::as_const(self.grad), rows, n);
        if (wants_grad(self, 0)) {
            view(self.parents[0]->ensure_grad(), rows, k).noalias() +=
                dY * view(self.parents[1]->data, k, n).transpose();
        }
        if (wants_grad(self, 1)) {
            view(self.parents[1]->ensure_grad(), k, n).noalias() +=
                view(self.parents[0]->data, rows, k).transpose() * dY;
        }
        if (wants_grad(self, 2)) {
            auto& db = self.parents[2]->ensure_grad();
            Eigen::Map<Eigen::RowVectorXd> acc(db.data(), static_cast<Eigen::Index>(n));
            for (Eigen::Index r = 0; r < dY.rows(); ++r) acc += dY.row(r);
        }
    });
}

Tensor add(const Tensor& a, const Tensor& b) {
    require_same_shape(a, b, "add");
    Buffer out(a.numel());
    const auto& ad = a.node()->data;
    const auto& bd = b.node()->data;
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = ad[i] + bd[i];
    return detail::make_result(a.shape(), std::move(out), {a, b}, [](TensorNode& self) {
        for (std::size_t p = 0; p < 2; ++p) {
            if (!wants_grad(self, p)) continue;
            auto& g = self.parents[p]->ensure_grad();
            for (std::size_t i = 0; i < g.size(); ++i) g[i] += self.grad[i];
        }
    });
}

Tensor mul(const Tensor& a, const Tensor& b) {
    require_same_shape(a, b, "mul");
    Buffer out(a.numel());
    const auto& ad = a.node()->data;
    const auto& bd = b.node()->data;
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = ad[i] * bd[i];
    return detail::make_result(a.shape(), std::move(out), {a, b}, [](TensorNode& self) {
        for (std::size_t p = 0; p < 2; ++p) {
            if (!wants_grad(self, p)) continue;
            const auto& other = self.parents[1 - p]->data;
            auto& g = self.parents[p]->ensure_grad();
            for (std::size_t i = 0; i < g.size(); ++i) g[i] += self.grad[i] * other[i];
        }
    });
}

Tensor scale(const Tensor& a, double factor) {
    Buffer out(a.data().begin(), a.data().end());
    for (auto& v : out) v *= factor;
    return detail::make_result(a.shape(), std::move(out), {a}, [factor](TensorNode& self) {
        auto& g = self.parents[0]->ensure_grad();
        for (std::size_t i = 0; i < g.size(); ++i) g[i] += self.grad[i] * factor;
    });
}

Tensor sum(const Tensor& a) {
    double total = 0.0;
    for (double v : a.data()) total += v;
    return detail::make_result({1}, {total}, {a}, [](TensorNode& self) {
        auto& g = self.parents[0]->ensure_grad();
        for (auto& v : g) v += self.grad[0];
    });
}

Tensor reshape(const Tensor& a, Shape shape) {
    if (shape_numel(shape) != a.numel()) {
        throw DimensionError("reshape: cannot view " + shape_str(a.shape()) + " as " + shape_str(shape));
    }
    return detail::make_result(std::move(shape), a.node()->data, {a}, [](TensorNode& self) {
        auto& g = self.parents[0]->ensure_grad();
        for (std::size_t i = 0; i < g.size(); ++i) g[i] += self.grad[i];
    });
}

Tensor softmax(const Tensor& x, std::size_t axis) {
    if (axis >= x.rank()) {
        throw DimensionError("softmax: axis " + std::to_string(axis) + " invalid for " + shape_str(x.shape()));
    }
    const auto& s = x.shape();
    std::size_t outer = 1, inner = 1;
    for (std::size_t i = 0; i < axis; ++i) outer *= s[i];
    for (std::size_t i = axis + 1; i < s.size(); ++i) inner *= s[i];
    const std::size_t len = s[axis];
    const auto& xd = x.node()->data;
    Buffer out(xd.size());
    for (std::size_t o = 0; o < outer; ++o) {
        for (std::size_t in = 0; in < inner; ++in) {
            const std::size_t base = o * len * inner + in;
            double mx = xd[base];
            for (std::size_t j = 1; j < len; ++j) mx = std::max(mx, xd[base + j * inner]);
            double z = 0.0;
            for (std::size_t j = 0; j < len; ++j) {
                const double e = std::exp(xd[base + j * inner] - mx);
                out[base + j * inner] = e;
                z += e;
            }
            for (std::size_t j = 0; j < len; ++j) out[base + j * inner] /= z;
        }
    }
    return detail::make_result(s, std::move(out), {x}, [outer, inner, len](TensorNode& self) {
        auto& g = self.parents[0]->ensure_grad();
        const auto& y = self.data;
        for (std::size_t o = 0; o < outer; ++o) {
            for (std::size_t in = 0; in < inner; ++in) {
                const std::size_t base = o * len * inner + in;
                double dot = 0.0;
                for (std::size_t j = 0; j < len; ++j) dot += self.grad[base + j * inner] * y[base + j * inner];
                for (std::size_t j = 0; j < len; ++j) {
                    const std::size_t idx = base + j * inner;
                    g[idx] += y[idx] * (self.grad[idx] - dot);
                }
            }
        }
    });
}

Tensor layer_norm(const Tensor& x, const Tensor& gain, const Tensor& bias, double eps) {
    if (!(eps > 0.0)) throw UsageError("layer_norm: eps must be positive");
    require_rank(gain, 1, "layer_norm");
    require_rank(bias, 1, "layer_norm");
    const std::size_t d = x.shape().back();
    if (gain.dim(0) != d || bias.dim(0) != d) {
        throw DimensionError("layer_norm: input " + shape_str(x.shape()) + " vs gain " + shape_str(gain.shape()) +
                             " / bias " + shape_str(bias.shape()));
    }
    const std::size_t rows = x.numel() / d;
    const auto& xd = x.node()->data;
    const auto& gd = gain.node()->data;
    const auto& bd = bias.node()->data;
    Buffer xhat(xd.size()), rstd(rows), out(xd.size());
    for (std::size_t r = 0; r < rows; ++r) {
        const double* row = xd.data() + r * d;
        double mean = 0.0;
        for (std::size_t j = 0; j < d; ++j) mean += row[j];
        mean /= static_cast<double>(d);
        double var = 0.0;
        for (std::size_t j = 0; j < d; ++j) var += (row[j] - mean) * (row[j] - mean);
        var /= static_cast<double>(d);
        rstd[r] = 1.0 / std::sqrt(var + eps);
        for (std::size_t j = 0; j < d; ++j) {
            const double xh = (row[j] - mean) * rstd[r];
            xhat[r * d + j] = xh;
            out[r * d + j] = gd[j] * xh + bd[j];
        }
    }
    return detail::make_result(
        x.shape(), std::move(out), {x, gain, bias},
        [rows, d, xhat = std::move(xhat), rstd = std::move(rstd)](TensorNode& self) {
            const auto& gd = self.parents[1]->data;
            if (wants_grad(self, 1) || wants_grad(self, 2)) {
                Buffer* dg = wants_grad(self, 1) ? &self.parents[1]->ensure_grad() : nullptr;
                Buffer* db = wants_grad(self, 2) ? &self.parents[2]->ensure_grad() : nullptr;
                for (std::size_t r = 0; r < rows; ++r) {
                    for (std::size_t j = 0; j < d; ++j) {
                        const double dy = self.grad[r * d + j];
                        if (dg) (*dg)[j] += dy * xhat[r * d + j];
                        if (db) (*db)[j] += dy;
                    }
                }
            }
            if (!wants_grad(self, 0)) return;
            auto& dx = self.parents[0]->ensure_grad();
            const double inv_d = 1.0 / static_cast<double>(d);
            for (std::size_t r = 0; r < rows; ++r) {
                double mean_dxh = 0.0, mean_dxh_xh = 0.0;
                for (std::size_t j = 0; j < d; ++j) {
                    const double dxh = self.grad[r * d + j] * gd[j];
                    mean_dxh += dxh;
                    mean_dxh_xh += dxh * xhat[r * d + j];
                }
                mean_dxh *= inv_d;
                mean_dxh_xh *= inv_d;
                for (std::size_t j = 0; j < d; ++j) {
                    const double dxh = self.grad[r * d + j] * gd[j];
                    dx[r * d + j] += rstd[r] * (dxh - mean_dxh - xhat[r * d + j] * mean_dxh_xh);
                }
            }
        });
}

Tensor gelu(const Tensor& x) {
    const auto& xd = x.node()->data;
    Buffer out(xd.size()), cdf(xd.size());
    for (std::size_t i = 0; i < xd.size(); ++i) {
        cdf[i] = 0.5 * (1.0 + std::erf(xd[i] / std::numbers::sqrt2));
        out[i] = xd[i] * cdf[i];
    }
    return detail::make_result(x.shape(), std::move(out), {x}, [cdf = std::move(cdf)](TensorNode& self) {
        const auto& xd = self.parents[0]->data;
        auto& g = self.parents[0]->ensure_grad();
        const auto n = static_cast<Eigen::Index>(xd.size());
        const Eigen::Map<const Eigen::ArrayXd> x(xd.data(), n);
        const Eigen::ArrayXd pdf = (-0.5 * x * x).exp() / std::sqrt(2.0 * std::numbers::pi);
        Eigen::Map<Eigen::ArrayXd>(g.data(), n) +=
            Eigen::Map<const Eigen::ArrayXd>(self.grad.data(), n) *
            (Eigen::Map<const Eigen::ArrayXd>(cdf.data(), n) + x * pdf);
    });
}

Tensor cross_entropy(const Tensor& logits, std::span<const std::size_t> labels) {
    require_rank(logits, 2, "cross_entropy");
    const std::size_t batch = logits.dim(0), classes = logits.dim(1);
    if (labels.size() != batch) {
        throw DimensionError("cross_entropy: " + std::to_string(labels.size()) + " labels for logits " +
                             shape_str(logits.shape()));
    }
    const auto& ld = logits.node()->data;
    Buffer probs(ld.size());
    double total = 0.0;
    for (std::size_t r = 0; r < batch; ++r) {
        if (labels[r] >= classes) {
            throw InputError("cross_entropy: label " + std::to_string(labels[r]) + " out of range for " +
                             std::to_string(classes) + " classes");
        }
        const double* row = ld.data() + r * classes;
        const double mx = *std::max_element(row, row + classes);
        double z = 0.0;
        for (std::size_t c = 0; c < classes; ++c) z += std::exp(row[c] - mx);
        const double log_z = mx + std::log(z);
        for (std::size_t c = 0; c < classes; ++c) probs[r * classes + c] = std::exp(row[c] - log_z);
        total += log_z - row[labels[r]];
    }
    std::vector<std::size_t> saved(labels.begin(), labels.end());
    return detail::make_result(
        {1}, {total / static_cast<double>(batch)}, {logits},
        [batch, classes, probs = std::move(probs), saved = std::move(saved)](TensorNode& self) {
            auto& g = self.parents[0]->ensure_grad();
            const double coef = self.grad[0] / static_cast<double>(batch);
            for (std::size_t r = 0; r < batch; ++r) {
                for (std::size_t c = 0; c < classes; ++c) {
                    const double onehot = c == saved[r] ? 1.0 : 0.0;
                    g[r * classes + c] += coef * (probs[r * classes + c] - onehot);
                }
            }
        });
}

Tensor mse(const Tensor& pred, const Tensor& target) {
    require_same_shape(pred, target, "mse");
    const auto& pd = pred.node()->data;
    const auto& td = target.node()->data;
    double total = 0.0;
    for (std::size_t i = 0; i < pd.size(); ++i) total += (pd[i] - td[i]) * (pd[i] - td[i]);
    const double n = static_cast<double>(pd.size());
    Buffer tcopy(td);
    return detail::make_result({1}, {total / n}, {pred}, [n, tcopy = std::move(tcopy)](TensorNode& self) {
        const auto& pd = self.parents[0]->data;
        auto& g = self.parents[0]->ensure_grad();
        for (std::size_t i = 0; i < pd.size(); ++i) g[i] += self.grad[0] * 2.0 * (pd[i] - tcopy[i]) / n;
    });
}

Tensor gather_rows(const Tensor& table, std::span<const std::size_t> ids) {
    require_rank(table, 2, "gather_rows");
    if (ids.empty()) throw DimensionError("gather_rows: empty index list");
    const std::size_t rows = table.dim(0), d = table.dim(1);
    const auto& td = table.node()->data;
    Buffer out(ids.size() * d);
    for (std::size_t i = 0; i < ids.size(); ++i) {
        if (ids[i] >= rows) {
            throw InputError("gather_rows: index " + std::to_string(ids[i]) + " out of range for table " +
                             shape_str(table.shape()));
        }
        std::copy_n(td.begin() + static_cast<std::ptrdiff_t>(ids[i] * d), d,
                    out.begin() + static_cast<std::ptrdiff_t>(i * d));
    }
    std::vector<std::size_t> saved(ids.begin(), ids.end());
    return detail::make_result({ids.size(), d}, std::move(out), {table}, [d, saved = std::move(saved)](TensorNode& self) {
        auto& g = self.parents[0]->ensure_grad();
        for (std::size_t i = 0; i < saved.size(); ++i) {
            for (std::size_t j = 0; j < d; ++j) g[saved[i] * d + j] += self.grad[i * d + j];
        }
    });
}

Tensor select_position(const Tensor& h, std::size_t position) {
    require_rank(h, 3, "select_position");
    const std::size_t b = h.dim(0), s = h.dim(1), d = h.dim(2);
    if (position >= s) throw DimensionError("select_position: position out of range for " + shape_str(h.shape()));
    const auto& hd = h.node()->data;
    Buffer out(b * d);
    for (std::size_t i = 0; i < b; ++i) {
        std::copy_n(hd.begin() + static_cast<std::ptrdiff_t>((i * s + position) * d), d,
                    out.begin() + static_cast<std::ptrdiff_t>(i * d));
    }
    return detail::make_result({b, d}, std::move(out), {h}, [b, s, d, position](TensorNode& self) {
        auto& g = self.parents[0]->ensure_grad();
        for (std::size_t i = 0; i < b; ++i) {
            for (std::size_t j = 0; j < d; ++j) g[(i * s + position) * d + j] += self.grad[i * d + j];
        }
    });
}

namespace {

// Index of element (batch, pos, feature) in the split layout.
struct HeadLayout {
    std::size_t b, s, d, heads, dh;
    std::size_t merged(std::size_t bi, std::size_t pos, std::size_t h, std::size_t j) const {
        return (bi * s + pos) * d + h * dh + j;
    }
    std::size_t split(std::size_t bi, std::size_t pos, std::size_t h, std::size_t j) const {
        return ((bi * heads + h) * s + pos) * dh + j;
    }
};

template <bool ToSplit>
void permute_heads(const HeadLayout& L, const Buffer& src, Buffer& dst, bool accumulate) {
    for (std::size_t bi = 0; bi < L.b; ++bi)
        for (std::size_t pos = 0; pos < L.s; ++pos)
            for (std::size_t h = 0; h < L.heads; ++h)
                for (std::size_t j = 0; j < L.dh; ++j) {
                    const std::size_t from = ToSplit ? L.merged(bi, pos, h, j) : L.split(bi, pos, h, j);
                    const std::size_t to = ToSplit ? L.split(bi, pos, h, j) : L.merged(bi, pos, h, j);
                    if (accumulate) {
                        dst[to] += src[from];
                    } else {
                        dst[to] = src[from];
                    }
                }
}

}  // namespace

Tensor split_heads(const Tensor& x, std::size_t heads) {
    require_rank(x, 3, "split_heads");
    if (heads == 0 || x.dim(2) % heads != 0) {
        throw DimensionError("split_heads: " + std::to_string(heads) + " heads do not divide " + shape_str(x.shape()));
    }
    HeadLayout L{x.dim(0), x.dim(1), x.dim(2), heads, x.dim(2) / heads};
    Buffer out(x.numel());
    permute_heads<true>(L, x.node()->data, out, false);
    return detail::make_result({L.b * heads, L.s, L.dh}, std::move(out), {x}, [L](TensorNode& self) {
        permute_heads<false>(L, self.grad, self.parents[0]->ensure_grad(), true);
    });
}

Tensor merge_heads(const Tensor& x, std::size_t heads) {
    require_rank(x, 3, "merge_heads");
    if (heads == 0 || x.dim(0) % heads != 0) {
        throw DimensionError("merge_heads: " + std::to_string(heads) + " heads do not divide " + shape_str(x.shape()));
    }
    HeadLayout L{x.dim(0) / heads, x.dim(1), x.dim(2) * heads, heads, x.dim(2)};
    Buffer out(x.numel());
    permute_heads<false>(L, x.node()->data, out, false);
    return detail::make_result({L.b, L.s, L.d}, std::move(out), {x}, [L](TensorNode& self) {
        permute_heads<true>(L, self.grad, self.parents[0]->ensure_grad(), true);
    });
}

Tensor mask_keys(const Tensor& scores, std::span<const std::uint8_t> key_valid, std::size_t heads) {
    require_rank(scores, 3, "mask_keys");
    const std::size_t bh = scores.dim(0), q = scores.dim(1), k = scores.dim(2);
    if (heads == 0 || bh % heads != 0 || key_valid.size() != (bh / heads) * k) {
        throw DimensionError("mask_keys: mask of " + std::to_string(key_valid.size()) + " entries for scores " +
                             shape_str(scores.shape()));
    }
    Buffer out(scores.data().begin(), scores.data().end());
    for (std::size_t i = 0; i < bh; ++i) {
        const std::size_t b = i / heads;
        for (std::size_t kj = 0; kj < k; ++kj) {
            if (key_valid[b * k + kj]) continue;
            for (std::size_t qi = 0; qi < q; ++qi) out[(i * q + qi) * k + kj] += kMaskedScore;
        }
    }
    return detail::make_result(scores.shape(), std::move(out), {scores}, [](TensorNode& self) {
        auto& g = self.parents[0]->ensure_grad();
        for (std::size_t i = 0; i < g.size(); ++i) g[i] += self.grad[i];
    });
}

}  // namespace hype::ops
