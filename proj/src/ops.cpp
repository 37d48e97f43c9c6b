#include "r2net/ops.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "r2net/errors.hpp"

namespace r2net {

using detail::make_result;
using detail::Node;

namespace {

Node& input(Node& self, std::size_t i) { return *self.inputs[i]; }

bool wants(Node& self, std::size_t i) { return self.inputs[i]->requires_grad; }

void require_rank(const Tensor& t, std::size_t rank, const char* op) {
    if (t.rank() != rank) {
        throw DimensionError(std::string(op) + ": expected rank " + std::to_string(rank) + ", got " +
                             shape_string(t.shape()));
    }
}

void require_same_shape(const Tensor& a, const Tensor& b, const char* op) {
    if (a.shape() != b.shape()) {
        throw DimensionError(std::string(op) + ": shape mismatch " + shape_string(a.shape()) + " vs " +
                             shape_string(b.shape()));
    }
}

std::vector<double> copy_values(const Tensor& t) { return {t.values().begin(), t.values().end()}; }

}  // namespace

Tensor matmul(const Tensor& a, const Tensor& b) {
    require_rank(a, 2, "matmul");
    require_rank(b, 2, "matmul");
    const std::size_t m = a.dim(0), k = a.dim(1), n = b.dim(1);
    if (b.dim(0) != k) {
        throw DimensionError("matmul: inner dimensions disagree " + shape_string(a.shape()) + " x " +
                             shape_string(b.shape()));
    }
    const auto av = a.values();
    const auto bv = b.values();
    std::vector<double> out(m * n, 0.0);
    for (std::size_t i = 0; i < m; ++i) {
        for (std::size_t p = 0; p < k; ++p) {
            const double aip = av[i * k + p];
            if (aip == 0.0) continue;
            const double* brow = &bv[p * n];
            double* orow = &out[i * n];
            for (std::size_t j = 0; j < n; ++j) orow[j] += aip * brow[j];
        }
    }
    return make_result({m, n}, std::move(out), "matmul", {a, b}, [m, k, n](Node& self) {
        const auto& g = self.grad;
        Node& na = input(self, 0);
        Node& nb = input(self, 1);
        if (wants(self, 0)) {
            auto& ga = na.grad_buffer();
            for (std::size_t i = 0; i < m; ++i) {
                for (std::size_t p = 0; p < k; ++p) {
                    double acc = 0.0;
                    for (std::size_t j = 0; j < n; ++j) acc += g[i * n + j] * nb.values[p * n + j];
                    ga[i * k + p] += acc;
                }
            }
        }
        if (wants(self, 1)) {
            auto& gb = nb.grad_buffer();
            for (std::size_t i = 0; i < m; ++i) {
                for (std::size_t p = 0; p < k; ++p) {
                    const double aip = na.values[i * k + p];
                    if (aip == 0.0) continue;
                    for (std::size_t j = 0; j < n; ++j) gb[p * n + j] += aip * g[i * n + j];
                }
            }
        }
    });
}

Tensor transpose(const Tensor& a) {
    require_rank(a, 2, "transpose");
    const std::size_t m = a.dim(0), n = a.dim(1);
    const auto av = a.values();
    std::vector<double> out(m * n);
    for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = 0; j < n; ++j) out[j * m + i] = av[i * n + j];
    return make_result({n, m}, std::move(out), "transpose", {a}, [m, n](Node& self) {
        auto& ga = input(self, 0).grad_buffer();
        for (std::size_t i = 0; i < m; ++i)
            for (std::size_t j = 0; j < n; ++j) ga[i * n + j] += self.grad[j * m + i];
    });
}

Tensor reshape(const Tensor& x, Shape shape) {
    if (element_count(shape) != x.size()) {
        throw DimensionError("reshape: cannot view " + shape_string(x.shape()) + " as " + shape_string(shape));
    }
    return make_result(std::move(shape), copy_values(x), "reshape", {x}, [](Node& self) {
        auto& gx = input(self, 0).grad_buffer();
        for (std::size_t i = 0; i < gx.size(); ++i) gx[i] += self.grad[i];
    });
}

Tensor linear(const Tensor& x, const Tensor& weight, const Tensor& bias) {
    if (x.rank() == 1) {
        return reshape(add_bias(matmul(reshape(x, {1, x.dim(0)}), weight), bias), {weight.dim(1)});
    }
    return add_bias(matmul(x, weight), bias);
}

namespace {

template <typename Forward, typename GradA, typename GradB>
Tensor binary_elementwise(const Tensor& a, const Tensor& b, const char* op, Forward f, GradA ga_rule,
                          GradB gb_rule) {
    require_same_shape(a, b, op);
    const auto av = a.values();
    const auto bv = b.values();
    std::vector<double> out(av.size());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = f(av[i], bv[i]);
    return make_result(a.shape(), std::move(out), op, {a, b}, [ga_rule, gb_rule](Node& self) {
        Node& na = input(self, 0);
        Node& nb = input(self, 1);
        if (wants(self, 0)) {
            auto& g = na.grad_buffer();
            for (std::size_t i = 0; i < g.size(); ++i) g[i] += self.grad[i] * ga_rule(na.values[i], nb.values[i]);
        }
        if (wants(self, 1)) {
            auto& g = nb.grad_buffer();
            for (std::size_t i = 0; i < g.size(); ++i) g[i] += self.grad[i] * gb_rule(na.values[i], nb.values[i]);
        }
    });
}

}  // namespace

Tensor add(const Tensor& a, const Tensor& b) {
    return binary_elementwise(
        a, b, "add", [](double x, double y) { return x + y; }, [](double, double) { return 1.0; },
        [](double, double) { return 1.0; });
}

Tensor sub(const Tensor& a, const Tensor& b) {
    return binary_elementwise(
        a, b, "sub", [](double x, double y) { return x - y; }, [](double, double) { return 1.0; },
        [](double, double) { return -1.0; });
}

Tensor mul(const Tensor& a, const Tensor& b) {
    return binary_elementwise(
        a, b, "mul", [](double x, double y) { return x * y; }, [](double, double y) { return y; },
        [](double x, double) { return x; });
}

Tensor operator+(const Tensor& a, const Tensor& b) { return add(a, b); }
Tensor operator-(const Tensor& a, const Tensor& b) { return sub(a, b); }
Tensor operator*(const Tensor& a, const Tensor& b) { return mul(a, b); }

Tensor add_bias(const Tensor& x, const Tensor& bias) {
    require_rank(bias, 1, "add_bias");
    const std::size_t n = bias.dim(0);
    if (x.shape().back() != n) {
        throw DimensionError("add_bias: " + shape_string(x.shape()) + " vs bias " + shape_string(bias.shape()));
    }
    if (x.rank() > 2) throw DimensionError("add_bias: rank > 2 unsupported");
    const std::size_t m = x.size() / n;
    std::vector<double> out = copy_values(x);
    const auto bv = bias.values();
    for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = 0; j < n; ++j) out[i * n + j] += bv[j];
    return make_result(x.shape(), std::move(out), "add_bias", {x, bias}, [m, n](Node& self) {
        if (wants(self, 0)) {
            auto& gx = input(self, 0).grad_buffer();
            for (std::size_t i = 0; i < gx.size(); ++i) gx[i] += self.grad[i];
        }
        if (wants(self, 1)) {
            auto& gb = input(self, 1).grad_buffer();
            for (std::size_t i = 0; i < m; ++i)
                for (std::size_t j = 0; j < n; ++j) gb[j] += self.grad[i * n + j];
        }
    });
}

Tensor scale(const Tensor& x, double factor) {
    std::vector<double> out = copy_values(x);
    for (double& v : out) v *= factor;
    return make_result(x.shape(), std::move(out), "scale", {x}, [factor](Node& self) {
        auto& gx = input(self, 0).grad_buffer();
        for (std::size_t i = 0; i < gx.size(); ++i) gx[i] += self.grad[i] * factor;
    });
}

Tensor add_scalar(const Tensor& x, double offset) {
    std::vector<double> out = copy_values(x);
    for (double& v : out) v += offset;
    return make_result(x.shape(), std::move(out), "add_scalar", {x}, [](Node& self) {
        auto& gx = input(self, 0).grad_buffer();
        for (std::size_t i = 0; i < gx.size(); ++i) gx[i] += self.grad[i];
    });
}

Tensor scale_by(const Tensor& x, const Tensor& factor) {
    if (factor.size() != 1) throw DimensionError("scale_by: factor must hold one value, got " + shape_string(factor.shape()));
    const double s = factor.item();
    std::vector<double> out = copy_values(x);
    for (double& v : out) v *= s;
    return make_result(x.shape(), std::move(out), "scale_by", {x, factor}, [](Node& self) {
        Node& nx = input(self, 0);
        Node& ns = input(self, 1);
        if (wants(self, 0)) {
            auto& gx = nx.grad_buffer();
            for (std::size_t i = 0; i < gx.size(); ++i) gx[i] += self.grad[i] * ns.values[0];
        }
        if (wants(self, 1)) {
            double acc = 0.0;
            for (std::size_t i = 0; i < nx.values.size(); ++i) acc += self.grad[i] * nx.values[i];
            ns.grad_buffer()[0] += acc;
        }
    });
}

Tensor relu(const Tensor& x) {
    std::vector<double> out = copy_values(x);
    for (double& v : out) v = v > 0.0 ? v : 0.0;
    return make_result(x.shape(), std::move(out), "relu", {x}, [](Node& self) {
        Node& nx = input(self, 0);
        auto& gx = nx.grad_buffer();
        for (std::size_t i = 0; i < gx.size(); ++i) {
            if (nx.values[i] > 0.0) gx[i] += self.grad[i];
        }
    });
}

Tensor log(const Tensor& x) {
    std::vector<double> out = copy_values(x);
    for (double& v : out) v = std::log(v);
    return make_result(x.shape(), std::move(out), "log", {x}, [](Node& self) {
        Node& nx = input(self, 0);
        auto& gx = nx.grad_buffer();
        for (std::size_t i = 0; i < gx.size(); ++i) gx[i] += self.grad[i] / nx.values[i];
    });
}

Tensor clamped_log(const Tensor& x, double floor) {
    std::vector<double> out = copy_values(x);
    for (double& v : out) v = std::log(std::max(v, floor));
    return make_result(x.shape(), std::move(out), "clamped_log", {x}, [floor](Node& self) {
        Node& nx = input(self, 0);
        auto& gx = nx.grad_buffer();
        for (std::size_t i = 0; i < gx.size(); ++i) {
            if (nx.values[i] > floor) gx[i] += self.grad[i] / nx.values[i];
        }
    });
}

Tensor sum(const Tensor& x) {
    double total = 0.0;
    for (double v : x.values()) total += v;
    return make_result({1}, {total}, "sum", {x}, [](Node& self) {
        auto& gx = input(self, 0).grad_buffer();
        for (double& g : gx) g += self.grad[0];
    });
}

Tensor mean(const Tensor& x) {
    const double n = static_cast<double>(x.size());
    double total = 0.0;
    for (double v : x.values()) total += v;
    return make_result({1}, {total / n}, "mean", {x}, [n](Node& self) {
        auto& gx = input(self, 0).grad_buffer();
        for (double& g : gx) g += self.grad[0] / n;
    });
}

Tensor pick(const Tensor& x, std::size_t flat_index) {
    if (flat_index >= x.size()) {
        throw DimensionError("pick: index " + std::to_string(flat_index) + " out of range for " +
                             shape_string(x.shape()));
    }
    return make_result({1}, {x.value(flat_index)}, "pick", {x}, [flat_index](Node& self) {
        input(self, 0).grad_buffer()[flat_index] += self.grad[0];
    });
}

Tensor softmax(const Tensor& x, std::size_t axis) {
    const Shape& s = x.shape();
    if (axis >= s.size()) {
        throw DimensionError("softmax: axis " + std::to_string(axis) + " out of range for " + shape_string(s));
    }
    std::size_t outer = 1, inner = 1;
    for (std::size_t i = 0; i < axis; ++i) outer *= s[i];
    for (std::size_t i = axis + 1; i < s.size(); ++i) inner *= s[i];
    const std::size_t n = s[axis];
    const auto xv = x.values();
    std::vector<double> out(xv.size());
    for (std::size_t o = 0; o < outer; ++o) {
        for (std::size_t in = 0; in < inner; ++in) {
            const std::size_t base = o * n * inner + in;
            double peak = -std::numeric_limits<double>::infinity();
            for (std::size_t j = 0; j < n; ++j) peak = std::max(peak, xv[base + j * inner]);
            double denom = 0.0;
            for (std::size_t j = 0; j < n; ++j) {
                const double e = std::exp(xv[base + j * inner] - peak);
                out[base + j * inner] = e;
                denom += e;
            }
            for (std::size_t j = 0; j < n; ++j) out[base + j * inner] /= denom;
        }
    }
    return make_result(s, std::move(out), "softmax", {x}, [outer, inner, n](Node& self) {
        auto& gx = input(self, 0).grad_buffer();
        const auto& y = self.values;
        for (std::size_t o = 0; o < outer; ++o) {
            for (std::size_t in = 0; in < inner; ++in) {
                const std::size_t base = o * n * inner + in;
                double dot = 0.0;
                for (std::size_t j = 0; j < n; ++j) dot += self.grad[base + j * inner] * y[base + j * inner];
                for (std::size_t j = 0; j < n; ++j) {
                    const std::size_t idx = base + j * inner;
                    gx[idx] += y[idx] * (self.grad[idx] - dot);
                }
            }
        }
    });
}

Tensor masked_softmax(const Tensor& x, const Mask& keep) {
    require_rank(x, 2, "masked_softmax");
    const std::size_t m = x.dim(0), n = x.dim(1);
    if (keep.size() != n) {
        throw DimensionError("masked_softmax: mask length " + std::to_string(keep.size()) + " vs " +
                             shape_string(x.shape()));
    }
    if (std::none_of(keep.begin(), keep.end(), [](bool b) { return b; })) {
        throw DegenerateInputError("masked_softmax: every position is masked");
    }
    const auto xv = x.values();
    std::vector<double> out(m * n, 0.0);
    for (std::size_t i = 0; i < m; ++i) {
        double peak = -std::numeric_limits<double>::infinity();
        for (std::size_t j = 0; j < n; ++j)
            if (keep[j]) peak = std::max(peak, xv[i * n + j]);
        double denom = 0.0;
        for (std::size_t j = 0; j < n; ++j) {
            if (!keep[j]) continue;
            const double e = std::exp(xv[i * n + j] - peak);
            out[i * n + j] = e;
            denom += e;
        }
        for (std::size_t j = 0; j < n; ++j) out[i * n + j] /= denom;
    }
    return make_result(x.shape(), std::move(out), "masked_softmax", {x}, [m, n](Node& self) {
        auto& gx = input(self, 0).grad_buffer();
        const auto& y = self.values;
        for (std::size_t i = 0; i < m; ++i) {
            double dot = 0.0;
            for (std::size_t j = 0; j < n; ++j) dot += self.grad[i * n + j] * y[i * n + j];
            for (std::size_t j = 0; j < n; ++j) gx[i * n + j] += y[i * n + j] * (self.grad[i * n + j] - dot);
        }
    });
}

Tensor layer_norm(const Tensor& x, const Tensor& gamma, const Tensor& beta, double eps) {
    require_rank(gamma, 1, "layer_norm");
    require_same_shape(gamma, beta, "layer_norm");
    const std::size_t n = gamma.dim(0);
    if (x.shape().back() != n || x.rank() > 2) {
        throw DimensionError("layer_norm: " + shape_string(x.shape()) + " vs gamma " + shape_string(gamma.shape()));
    }
    const std::size_t m = x.size() / n;
    const auto xv = x.values();
    const auto gv = gamma.values();
    const auto bv = beta.values();
    std::vector<double> normalized(m * n), inv_std(m), out(m * n);
    for (std::size_t i = 0; i < m; ++i) {
        double mu = 0.0;
        for (std::size_t j = 0; j < n; ++j) mu += xv[i * n + j];
        mu /= static_cast<double>(n);
        double var = 0.0;
        for (std::size_t j = 0; j < n; ++j) {
            const double c = xv[i * n + j] - mu;
            var += c * c;
        }
        var /= static_cast<double>(n);
        inv_std[i] = 1.0 / std::sqrt(var + eps);
        for (std::size_t j = 0; j < n; ++j) {
            normalized[i * n + j] = (xv[i * n + j] - mu) * inv_std[i];
            out[i * n + j] = gv[j] * normalized[i * n + j] + bv[j];
        }
    }
    return make_result(x.shape(), std::move(out), "layer_norm", {x, gamma, beta},
                       [m, n, normalized = std::move(normalized), inv_std = std::move(inv_std)](Node& self) {
                           Node& ng = input(self, 1);
                           if (wants(self, 1)) {
                               auto& gg = ng.grad_buffer();
                               for (std::size_t i = 0; i < m; ++i)
                                   for (std::size_t j = 0; j < n; ++j)
                                       gg[j] += self.grad[i * n + j] * normalized[i * n + j];
                           }
                           if (wants(self, 2)) {
                               auto& gb = input(self, 2).grad_buffer();
                               for (std::size_t i = 0; i < m; ++i)
                                   for (std::size_t j = 0; j < n; ++j) gb[j] += self.grad[i * n + j];
                           }
                           if (wants(self, 0)) {
                               auto& gx = input(self, 0).grad_buffer();
                               const double dn = static_cast<double>(n);
                               for (std::size_t i = 0; i < m; ++i) {
                                   double sum_d = 0.0, sum_dx = 0.0;
                                   for (std::size_t j = 0; j < n; ++j) {
                                       const double d = self.grad[i * n + j] * ng.values[j];
                                       sum_d += d;
                                       sum_dx += d * normalized[i * n + j];
                                   }
                                   for (std::size_t j = 0; j < n; ++j) {
                                       const double d = self.grad[i * n + j] * ng.values[j];
                                       gx[i * n + j] +=
                                           inv_std[i] / dn * (dn * d - sum_d - normalized[i * n + j] * sum_dx);
                                   }
                               }
                           }
                       });
}

Tensor embedding_lookup(const Tensor& table, std::span<const int> ids) {
    require_rank(table, 2, "embedding_lookup");
    const std::size_t vocab = table.dim(0), d = table.dim(1);
    if (ids.empty()) throw DegenerateInputError("embedding_lookup: empty id sequence");
    const auto tv = table.values();
    std::vector<double> out(ids.size() * d);
    std::vector<int> rows(ids.begin(), ids.end());
    for (std::size_t i = 0; i < rows.size(); ++i) {
        if (rows[i] < 0 || static_cast<std::size_t>(rows[i]) >= vocab) {
            throw DimensionError("embedding_lookup: id " + std::to_string(rows[i]) + " outside table of " +
                                 std::to_string(vocab) + " rows");
        }
        std::copy_n(&tv[static_cast<std::size_t>(rows[i]) * d], d, &out[i * d]);
    }
    Shape shape{rows.size(), d};
    return make_result(std::move(shape), std::move(out), "embedding_lookup", {table},
                       [rows = std::move(rows), d](Node& self) {
                           auto& gt = input(self, 0).grad_buffer();
                           for (std::size_t i = 0; i < rows.size(); ++i) {
                               const std::size_t r = static_cast<std::size_t>(rows[i]);
                               for (std::size_t j = 0; j < d; ++j) gt[r * d + j] += self.grad[i * d + j];
                           }
                       });
}

Tensor concat(std::span<const Tensor> parts, std::size_t axis) {
    if (parts.empty()) throw DegenerateInputError("concat: no operands");
    const Shape& first = parts[0].shape();
    if (axis >= first.size()) throw DimensionError("concat: axis out of range for " + shape_string(first));
    Shape out_shape = first;
    out_shape[axis] = 0;
    for (const Tensor& p : parts) {
        const Shape& s = p.shape();
        bool ok = s.size() == first.size();
        for (std::size_t i = 0; ok && i < s.size(); ++i) ok = i == axis || s[i] == first[i];
        if (!ok) throw DimensionError("concat: " + shape_string(first) + " vs " + shape_string(s));
        out_shape[axis] += s[axis];
    }
    std::size_t outer = 1, inner = 1;
    for (std::size_t i = 0; i < axis; ++i) outer *= first[i];
    for (std::size_t i = axis + 1; i < first.size(); ++i) inner *= first[i];
    const std::size_t total = out_shape[axis];
    std::vector<std::size_t> offsets;
    std::vector<double> out(element_count(out_shape));
    std::size_t offset = 0;
    for (const Tensor& p : parts) {
        const std::size_t width = p.dim(axis);
        const auto pv = p.values();
        for (std::size_t o = 0; o < outer; ++o)
            std::copy_n(&pv[o * width * inner], width * inner, &out[(o * total + offset) * inner]);
        offsets.push_back(offset);
        offset += width;
    }
    std::vector<Tensor> inputs(parts.begin(), parts.end());
    return make_result(std::move(out_shape), std::move(out), "concat", std::move(inputs),
                       [outer, inner, total, axis, offsets = std::move(offsets)](Node& self) {
                           for (std::size_t k = 0; k < self.inputs.size(); ++k) {
                               if (!wants(self, k)) continue;
                               Node& part = input(self, k);
                               const std::size_t width = part.shape[axis];
                               auto& gp = part.grad_buffer();
                               for (std::size_t o = 0; o < outer; ++o)
                                   for (std::size_t e = 0; e < width * inner; ++e)
                                       gp[o * width * inner + e] += self.grad[(o * total + offsets[k]) * inner + e];
                           }
                       });
}

Tensor concat(std::initializer_list<Tensor> parts, std::size_t axis) {
    return concat(std::span<const Tensor>(parts.begin(), parts.size()), axis);
}

Tensor slice(const Tensor& x, std::size_t axis, std::size_t begin, std::size_t end) {
    const Shape& s = x.shape();
    if (axis >= s.size() || begin >= end || end > s[axis]) {
        throw DimensionError("slice: [" + std::to_string(begin) + ", " + std::to_string(end) + ") on axis " +
                             std::to_string(axis) + " of " + shape_string(s));
    }
    std::size_t outer = 1, inner = 1;
    for (std::size_t i = 0; i < axis; ++i) outer *= s[i];
    for (std::size_t i = axis + 1; i < s.size(); ++i) inner *= s[i];
    const std::size_t full = s[axis], width = end - begin;
    Shape out_shape = s;
    out_shape[axis] = width;
    const auto xv = x.values();
    std::vector<double> out(outer * width * inner);
    for (std::size_t o = 0; o < outer; ++o)
        std::copy_n(&xv[(o * full + begin) * inner], width * inner, &out[o * width * inner]);
    return make_result(std::move(out_shape), std::move(out), "slice", {x},
                       [outer, inner, full, begin, width](Node& self) {
                           auto& gx = input(self, 0).grad_buffer();
                           for (std::size_t o = 0; o < outer; ++o)
                               for (std::size_t e = 0; e < width * inner; ++e)
                                   gx[(o * full + begin) * inner + e] += self.grad[o * width * inner + e];
                       });
}

Tensor row(const Tensor& x, std::size_t index) {
    require_rank(x, 2, "row");
    return reshape(slice(x, 0, index, index + 1), {x.dim(1)});
}

Tensor conv1d(const Tensor& x, const Tensor& kernel, const Tensor& bias) {
    require_rank(x, 2, "conv1d");
    require_rank(kernel, 3, "conv1d");
    const std::size_t len = x.dim(0), d = x.dim(1);
    const std::size_t k = kernel.dim(0), d_out = kernel.dim(2);
    if (kernel.dim(1) != d) {
        throw DimensionError("conv1d: input " + shape_string(x.shape()) + " vs kernel " +
                             shape_string(kernel.shape()));
    }
    if (bias.defined() && (bias.rank() != 1 || bias.dim(0) != d_out)) {
        throw DimensionError("conv1d: bias " + shape_string(bias.shape()) + " vs d_out " + std::to_string(d_out));
    }
    if (k > len) {
        throw DegenerateInputError("conv1d: kernel width " + std::to_string(k) + " exceeds sequence length " +
                                   std::to_string(len));
    }
    const std::size_t left = (k - 1) / 2;
    const auto xv = x.values();
    const auto kv = kernel.values();
    std::vector<double> out(len * d_out, 0.0);
    for (std::size_t t = 0; t < len; ++t) {
        double* orow = &out[t * d_out];
        if (bias.defined()) {
            const auto bv = bias.values();
            std::copy(bv.begin(), bv.end(), orow);
        }
        for (std::size_t j = 0; j < k; ++j) {
            const std::ptrdiff_t src = static_cast<std::ptrdiff_t>(t + j) - static_cast<std::ptrdiff_t>(left);
            if (src < 0 || src >= static_cast<std::ptrdiff_t>(len)) continue;
            for (std::size_t c = 0; c < d; ++c) {
                const double xval = xv[static_cast<std::size_t>(src) * d + c];
                const double* krow = &kv[(j * d + c) * d_out];
                for (std::size_t o = 0; o < d_out; ++o) orow[o] += xval * krow[o];
            }
        }
    }
    std::vector<Tensor> inputs{x, kernel};
    if (bias.defined()) inputs.push_back(bias);
    return make_result({len, d_out}, std::move(out), "conv1d", std::move(inputs),
                       [len, d, k, d_out, left](Node& self) {
                           Node& nx = input(self, 0);
                           Node& nk = input(self, 1);
                           const bool want_x = wants(self, 0), want_k = wants(self, 1);
                           std::vector<double>* gx = want_x ? &nx.grad_buffer() : nullptr;
                           std::vector<double>* gk = want_k ? &nk.grad_buffer() : nullptr;
                           for (std::size_t t = 0; t < len; ++t) {
                               const double* g = &self.grad[t * d_out];
                               for (std::size_t j = 0; j < k; ++j) {
                                   const std::ptrdiff_t src =
                                       static_cast<std::ptrdiff_t>(t + j) - static_cast<std::ptrdiff_t>(left);
                                   if (src < 0 || src >= static_cast<std::ptrdiff_t>(len)) continue;
                                   const std::size_t s = static_cast<std::size_t>(src);
                                   for (std::size_t c = 0; c < d; ++c) {
                                       const std::size_t kbase = (j * d + c) * d_out;
                                       if (gx) {
                                           double acc = 0.0;
                                           for (std::size_t o = 0; o < d_out; ++o) acc += g[o] * nk.values[kbase + o];
                                           (*gx)[s * d + c] += acc;
                                       }
                                       if (gk) {
                                           const double xval = nx.values[s * d + c];
                                           for (std::size_t o = 0; o < d_out; ++o) (*gk)[kbase + o] += xval * g[o];
                                       }
                                   }
                               }
                           }
                           if (self.inputs.size() > 2 && wants(self, 2)) {
                               auto& gb = input(self, 2).grad_buffer();
                               for (std::size_t t = 0; t < len; ++t)
                                   for (std::size_t o = 0; o < d_out; ++o) gb[o] += self.grad[t * d_out + o];
                           }
                       });
}

namespace {

std::size_t check_pool_args(const Tensor& seq, const Mask& valid, const char* op) {
    require_rank(seq, 2, op);
    if (valid.size() != seq.dim(0)) {
        throw DimensionError(std::string(op) + ": mask length " + std::to_string(valid.size()) + " vs " +
                             shape_string(seq.shape()));
    }
    const auto count = static_cast<std::size_t>(std::count(valid.begin(), valid.end(), true));
    if (count == 0) throw DegenerateInputError(std::string(op) + ": no valid positions");
    return count;
}

}  // namespace

Tensor masked_max_pool(const Tensor& seq, const Mask& valid) {
    check_pool_args(seq, valid, "masked_max_pool");
    const std::size_t len = seq.dim(0), c = seq.dim(1);
    const auto sv = seq.values();
    std::vector<double> out(c, -std::numeric_limits<double>::infinity());
    std::vector<std::size_t> argmax(c, 0);
    for (std::size_t t = 0; t < len; ++t) {
        if (!valid[t]) continue;
        for (std::size_t j = 0; j < c; ++j) {
            if (sv[t * c + j] > out[j]) {
                out[j] = sv[t * c + j];
                argmax[j] = t;
            }
        }
    }
    return make_result({c}, std::move(out), "masked_max_pool", {seq}, [c, argmax = std::move(argmax)](Node& self) {
        auto& gs = input(self, 0).grad_buffer();
        for (std::size_t j = 0; j < c; ++j) gs[argmax[j] * c + j] += self.grad[j];
    });
}

Tensor masked_avg_pool(const Tensor& seq, const Mask& valid) {
    const double count = static_cast<double>(check_pool_args(seq, valid, "masked_avg_pool"));
    const std::size_t len = seq.dim(0), c = seq.dim(1);
    const auto sv = seq.values();
    std::vector<double> out(c, 0.0);
    for (std::size_t t = 0; t < len; ++t) {
        if (!valid[t]) continue;
        for (std::size_t j = 0; j < c; ++j) out[j] += sv[t * c + j];
    }
    for (double& v : out) v /= count;
    return make_result({c}, std::move(out), "masked_avg_pool", {seq}, [len, c, count, valid](Node& self) {
        auto& gs = input(self, 0).grad_buffer();
        for (std::size_t t = 0; t < len; ++t) {
            if (!valid[t]) continue;
            for (std::size_t j = 0; j < c; ++j) gs[t * c + j] += self.grad[j] / count;
        }
    });
}

Tensor euclidean_distance(const Tensor& a, const Tensor& b) {
    require_same_shape(a, b, "euclidean_distance");
    const auto av = a.values();
    const auto bv = b.values();
    double sq = 0.0;
    for (std::size_t i = 0; i < av.size(); ++i) {
        const double diff = av[i] - bv[i];
        sq += diff * diff;
    }
    const double dist = std::sqrt(sq);
    return make_result({1}, {dist}, "euclidean_distance", {a, b}, [dist](Node& self) {
        Node& na = input(self, 0);
        Node& nb = input(self, 1);
        const double factor = self.grad[0] / std::max(dist, 1e-12);
        if (wants(self, 0)) {
            auto& ga = na.grad_buffer();
            for (std::size_t i = 0; i < ga.size(); ++i) ga[i] += factor * (na.values[i] - nb.values[i]);
        }
        if (wants(self, 1)) {
            auto& gb = nb.grad_buffer();
            for (std::size_t i = 0; i < gb.size(); ++i) gb[i] -= factor * (na.values[i] - nb.values[i]);
        }
    });
}

}  // namespace r2net
