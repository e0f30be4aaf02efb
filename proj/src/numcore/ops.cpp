// Copyright (c) 2026 The gflow Authors
// SPDX-License-Identifier: Apache-2.0

#include "gflow/numcore/ops.hpp"

#include <cmath>
#include <numbers>

#include "gflow/errors.hpp"
#include "gflow/numcore/linalg.hpp"

namespace gflow::num::ops {

namespace {

void require_same_size(const Tensor& a, const Tensor& b, const char* op) {
    if (a.size() != b.size()) {
        throw ShapeError(std::string(op) + ": " + shape_string(a.shape()) + " vs " + shape_string(b.shape()));
    }
}

// Elementwise unary op. `deriv(x, y)` returns dy/dx.
template <typename F, typename D>
Var unary(Tape& t, Var a, F f, D deriv) {
    const Tensor& x = t.value(a);
    Tensor y(x.shape());
    for (std::size_t i = 0; i < x.size(); ++i) y[i] = f(x[i]);
    return t.push(std::move(y), {a}, [a, deriv](Tape& tp, int self) {
        const Tensor& g = tp.grad(self);
        const Tensor& x = tp.value(a);
        const Tensor& y = tp.value(Var{self});
        Tensor& ga = tp.grad(a);
        for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i] * deriv(x[i], y[i]);
    });
}

}  // namespace

Var matmul(Tape& t, Var a, Var b) {
    const Tensor& x = t.value(a);
    const Tensor& w = t.value(b);
    const std::size_t n = x.rows(), k = x.cols(), m = w.cols();
    if (w.rows() != k) {
        throw ShapeError("matmul: " + shape_string(x.shape()) + " x " + shape_string(w.shape()));
    }
    Tensor y = Tensor::matrix(n, m);
    kernels::gemm_nn(n, k, m, x.data(), w.data(), y.data(), false);
    return t.push(std::move(y), {a, b}, [a, b, n, k, m](Tape& tp, int self) {
        const Tensor& g = tp.grad(self);
        if (tp.requires_grad(a)) {
            kernels::gemm_nt(n, m, k, g.data(), tp.value(b).data(), tp.grad(a).data(), true);
        }
        if (tp.requires_grad(b)) {
            kernels::gemm_tn(n, k, m, tp.value(a).data(), g.data(), tp.grad(b).data(), true);
        }
    });
}

Var add(Tape& t, Var a, Var b) {
    const Tensor& x = t.value(a);
    const Tensor& y = t.value(b);
    require_same_size(x, y, "add");
    Tensor out = x;
    for (std::size_t i = 0; i < out.size(); ++i) out[i] += y[i];
    return t.push(std::move(out), {a, b}, [a, b](Tape& tp, int self) {
        const Tensor& g = tp.grad(self);
        for (Var v : {a, b}) {
            if (!tp.requires_grad(v)) continue;
            Tensor& gv = tp.grad(v);
            for (std::size_t i = 0; i < g.size(); ++i) gv[i] += g[i];
        }
    });
}

Var sub(Tape& t, Var a, Var b) {
    const Tensor& x = t.value(a);
    const Tensor& y = t.value(b);
    require_same_size(x, y, "sub");
    Tensor out = x;
    for (std::size_t i = 0; i < out.size(); ++i) out[i] -= y[i];
    return t.push(std::move(out), {a, b}, [a, b](Tape& tp, int self) {
        const Tensor& g = tp.grad(self);
        if (tp.requires_grad(a)) {
            Tensor& ga = tp.grad(a);
            for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i];
        }
        if (tp.requires_grad(b)) {
            Tensor& gb = tp.grad(b);
            for (std::size_t i = 0; i < g.size(); ++i) gb[i] -= g[i];
        }
    });
}

Var mul(Tape& t, Var a, Var b) {
    const Tensor& x = t.value(a);
    const Tensor& y = t.value(b);
    require_same_size(x, y, "mul");
    Tensor out = x;
    for (std::size_t i = 0; i < out.size(); ++i) out[i] *= y[i];
    return t.push(std::move(out), {a, b}, [a, b](Tape& tp, int self) {
        const Tensor& g = tp.grad(self);
        if (tp.requires_grad(a)) {
            const Tensor& y = tp.value(b);
            Tensor& ga = tp.grad(a);
            for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i] * y[i];
        }
        if (tp.requires_grad(b)) {
            const Tensor& x = tp.value(a);
            Tensor& gb = tp.grad(b);
            for (std::size_t i = 0; i < g.size(); ++i) gb[i] += g[i] * x[i];
        }
    });
}

Var div(Tape& t, Var a, Var b) {
    const Tensor& x = t.value(a);
    const Tensor& y = t.value(b);
    require_same_size(x, y, "div");
    Tensor out = x;
    for (std::size_t i = 0; i < out.size(); ++i) out[i] /= y[i];
    return t.push(std::move(out), {a, b}, [a, b](Tape& tp, int self) {
        const Tensor& g = tp.grad(self);
        const Tensor& y = tp.value(b);
        if (tp.requires_grad(a)) {
            Tensor& ga = tp.grad(a);
            for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i] / y[i];
        }
        if (tp.requires_grad(b)) {
            const Tensor& q = tp.value(Var{self});
            Tensor& gb = tp.grad(b);
            for (std::size_t i = 0; i < g.size(); ++i) gb[i] -= g[i] * q[i] / y[i];
        }
    });
}

Var add_row(Tape& t, Var a, Var row) {
    const Tensor& x = t.value(a);
    const Tensor& r = t.value(row);
    const std::size_t m = x.cols();
    if (r.size() != m) throw ShapeError("add_row: row of " + std::to_string(r.size()) + " for " + std::to_string(m) + " columns");
    Tensor out = x;
    for (std::size_t i = 0; i < x.rows(); ++i) {
        for (std::size_t j = 0; j < m; ++j) out[i * m + j] += r[j];
    }
    return t.push(std::move(out), {a, row}, [a, row, m](Tape& tp, int self) {
        const Tensor& g = tp.grad(self);
        if (tp.requires_grad(a)) {
            Tensor& ga = tp.grad(a);
            for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i];
        }
        if (tp.requires_grad(row)) {
            Tensor& gr = tp.grad(row);
            const std::size_t n = g.size() / m;
            for (std::size_t i = 0; i < n; ++i) {
                for (std::size_t j = 0; j < m; ++j) gr[j] += g[i * m + j];
            }
        }
    });
}

Var add_broadcast(Tape& t, Var a, Var s) {
    const Tensor& x = t.value(a);
    const double v = t.value(s).item();
    Tensor out = x;
    for (std::size_t i = 0; i < out.size(); ++i) out[i] += v;
    return t.push(std::move(out), {a, s}, [a, s](Tape& tp, int self) {
        const Tensor& g = tp.grad(self);
        if (tp.requires_grad(a)) {
            Tensor& ga = tp.grad(a);
            for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i];
        }
        if (tp.requires_grad(s)) tp.grad(s)[0] += g.sum();
    });
}

Var scale(Tape& t, Var a, double c) {
    return unary(t, a, [c](double x) { return c * x; }, [c](double, double) { return c; });
}

Var add_scalar(Tape& t, Var a, double c) {
    return unary(t, a, [c](double x) { return x + c; }, [](double, double) { return 1.0; });
}

Var sigmoid(Tape& t, Var a) {
    return unary(t, a, [](double x) { return 1.0 / (1.0 + std::exp(-x)); },
                 [](double, double y) { return y * (1.0 - y); });
}

Var tanh(Tape& t, Var a) {
    return unary(t, a, [](double x) { return std::tanh(x); }, [](double, double y) { return 1.0 - y * y; });
}

Var relu(Tape& t, Var a) {
    return unary(t, a, [](double x) { return x > 0.0 ? x : 0.0; },
                 [](double x, double) { return x > 0.0 ? 1.0 : 0.0; });
}

Var log(Tape& t, Var a) {
    return unary(t, a, [](double x) { return std::log(x); }, [](double x, double) { return 1.0 / x; });
}

Var log_abs(Tape& t, Var a) {
    return unary(t, a, [](double x) { return std::log(std::abs(x)); }, [](double x, double) { return 1.0 / x; });
}

Var square(Tape& t, Var a) {
    return unary(t, a, [](double x) { return x * x; }, [](double x, double) { return 2.0 * x; });
}

Var sum(Tape& t, Var a) {
    return t.push(Tensor::scalar(t.value(a).sum()), {a}, [a](Tape& tp, int self) {
        const double g = tp.grad(self)[0];
        Tensor& ga = tp.grad(a);
        for (std::size_t i = 0; i < ga.size(); ++i) ga[i] += g;
    });
}

Var group_sum(Tape& t, Var a, std::size_t groups) {
    const Tensor& x = t.value(a);
    if (groups == 0 || x.size() % groups != 0) throw ShapeError("group_sum: size not divisible by groups");
    const std::size_t block = x.size() / groups;
    Tensor out = Tensor::matrix(groups, 1);
    for (std::size_t g = 0; g < groups; ++g) {
        double s = 0.0;
        for (std::size_t i = 0; i < block; ++i) s += x[g * block + i];
        out[g] = s;
    }
    return t.push(std::move(out), {a}, [a, groups, block](Tape& tp, int self) {
        const Tensor& g = tp.grad(self);
        Tensor& ga = tp.grad(a);
        for (std::size_t k = 0; k < groups; ++k) {
            for (std::size_t i = 0; i < block; ++i) ga[k * block + i] += g[k];
        }
    });
}

Var block_mean_rows(Tape& t, Var a, std::size_t block_rows) {
    const Tensor& x = t.value(a);
    const std::size_t m = x.cols();
    if (block_rows == 0 || x.rows() % block_rows != 0) throw ShapeError("block_mean_rows: rows not divisible");
    const std::size_t blocks = x.rows() / block_rows;
    const double inv = 1.0 / static_cast<double>(block_rows);
    Tensor out = Tensor::matrix(blocks, m);
    for (std::size_t b = 0; b < blocks; ++b) {
        for (std::size_t r = 0; r < block_rows; ++r) {
            for (std::size_t j = 0; j < m; ++j) out[b * m + j] += x[(b * block_rows + r) * m + j];
        }
        for (std::size_t j = 0; j < m; ++j) out[b * m + j] *= inv;
    }
    return t.push(std::move(out), {a}, [a, blocks, block_rows, m, inv](Tape& tp, int self) {
        const Tensor& g = tp.grad(self);
        Tensor& ga = tp.grad(a);
        for (std::size_t b = 0; b < blocks; ++b) {
            for (std::size_t r = 0; r < block_rows; ++r) {
                for (std::size_t j = 0; j < m; ++j) ga[(b * block_rows + r) * m + j] += g[b * m + j] * inv;
            }
        }
    });
}

Var reshape(Tape& t, Var a, Shape shape) {
    Tensor out = t.value(a).reshaped(std::move(shape));
    return t.push(std::move(out), {a}, [a](Tape& tp, int self) {
        const Tensor& g = tp.grad(self);
        Tensor& ga = tp.grad(a);
        for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i];
    });
}

Var slice_cols(Tape& t, Var a, std::size_t begin, std::size_t end) {
    const Tensor& x = t.value(a);
    const std::size_t m = x.cols(), n = x.rows(), w = end - begin;
    if (begin >= end || end > m) throw ShapeError("slice_cols: bad range");
    Tensor out = Tensor::matrix(n, w);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < w; ++j) out[i * w + j] = x[i * m + begin + j];
    }
    return t.push(std::move(out), {a}, [a, begin, m, n, w](Tape& tp, int self) {
        const Tensor& g = tp.grad(self);
        Tensor& ga = tp.grad(a);
        for (std::size_t i = 0; i < n; ++i) {
            for (std::size_t j = 0; j < w; ++j) ga[i * m + begin + j] += g[i * w + j];
        }
    });
}

Var concat_cols(Tape& t, std::span<const Var> parts) {
    if (parts.empty()) throw ShapeError("concat_cols: no inputs");
    const std::size_t n = t.value(parts[0]).rows();
    std::vector<std::size_t> widths;
    std::size_t total = 0;
    for (Var p : parts) {
        const Tensor& v = t.value(p);
        if (v.rows() != n) throw ShapeError("concat_cols: row count mismatch");
        widths.push_back(v.cols());
        total += v.cols();
    }
    Tensor out = Tensor::matrix(n, total);
    std::size_t offset = 0;
    for (std::size_t k = 0; k < parts.size(); ++k) {
        const Tensor& v = t.value(parts[k]);
        for (std::size_t i = 0; i < n; ++i) {
            for (std::size_t j = 0; j < widths[k]; ++j) out[i * total + offset + j] = v[i * widths[k] + j];
        }
        offset += widths[k];
    }
    std::vector<Var> ps(parts.begin(), parts.end());
    return t.push(std::move(out), ps, [ps, widths, n, total](Tape& tp, int self) {
        const Tensor& g = tp.grad(self);
        std::size_t offset = 0;
        for (std::size_t k = 0; k < ps.size(); ++k) {
            if (tp.requires_grad(ps[k])) {
                Tensor& gp = tp.grad(ps[k]);
                for (std::size_t i = 0; i < n; ++i) {
                    for (std::size_t j = 0; j < widths[k]; ++j) gp[i * widths[k] + j] += g[i * total + offset + j];
                }
            }
            offset += widths[k];
        }
    });
}

Var graph_aggregate(Tape& t, Var xw, const kernels::SubsetStack& stack, std::size_t batch) {
    const Tensor& x = t.value(xw);
    const std::size_t d = stack.subsets.size();
    if (x.rows() != batch * stack.markers || x.cols() % d != 0) {
        throw ShapeError("graph_aggregate: input " + shape_string(x.shape()) + " does not match " +
                         std::to_string(batch) + " graphs of " + std::to_string(stack.markers) + " markers, " +
                         std::to_string(d) + " subsets");
    }
    const std::size_t width = x.cols() / d;
    Tensor y = Tensor::matrix(batch * stack.markers, width);
    kernels::graph_aggregate(stack, batch, width, x.data(), y.data());
    const kernels::SubsetStack* sp = &stack;
    return t.push(std::move(y), {xw}, [xw, sp, batch, width](Tape& tp, int self) {
        kernels::graph_aggregate_adjoint(*sp, batch, width, tp.grad(self).data(), tp.grad(xw).data());
    });
}

Var temporal_conv(Tape& t, Var x, Var kernel, std::size_t batch, std::size_t time, std::size_t markers) {
    const Tensor& xv = t.value(x);
    const Tensor& kv = t.value(kernel);
    const std::size_t channels = xv.cols();
    const std::size_t taps = kv.rows();
    if (kv.cols() != channels || xv.rows() != batch * time * markers || taps % 2 == 0) {
        throw ShapeError("temporal_conv: input " + shape_string(xv.shape()) + ", kernel " + shape_string(kv.shape()));
    }
    Tensor y(xv.shape());
    kernels::temporal_conv(batch, time, markers, channels, taps, xv.data(), kv.data(), y.data());
    return t.push(std::move(y), {x, kernel}, [=](Tape& tp, int self) {
        double* dx = tp.requires_grad(x) ? tp.grad(x).data() : nullptr;
        double* dk = tp.requires_grad(kernel) ? tp.grad(kernel).data() : nullptr;
        kernels::temporal_conv_backward(batch, time, markers, channels, taps, tp.value(x).data(),
                                        tp.value(kernel).data(), tp.grad(self).data(), dx, dk);
    });
}

Var lstm_cell(Tape& t, Var gates, Var c) {
    const Tensor& g = t.value(gates);
    const Tensor& cv = t.value(c);
    const std::size_t hidden = cv.cols();
    const std::size_t n = cv.rows();
    if (g.rows() != n || g.cols() != 4 * hidden) throw ShapeError("lstm_cell: gate/state shape mismatch");
    Tensor out = Tensor::matrix(n, 2 * hidden);
    kernels::lstm_pointwise(n, hidden, g.data(), cv.data(), out.data());
    return t.push(std::move(out), {gates, c}, [gates, c, n, hidden](Tape& tp, int self) {
        double* dc = tp.requires_grad(c) ? tp.grad(c).data() : nullptr;
        kernels::lstm_pointwise_backward(n, hidden, tp.value(gates).data(), tp.value(c).data(),
                                         tp.value(Var{self}).data(), tp.grad(self).data(),
                                         tp.grad(gates).data(), dc);
    });
}

Var actnorm(Tape& t, Var x, Var scale, Var bias) {
    const Tensor& xv = t.value(x);
    const Tensor& s = t.value(scale);
    const Tensor& b = t.value(bias);
    const std::size_t frame = s.size();
    if (b.size() != frame || xv.size() % frame != 0) throw ShapeError("actnorm: parameter/input shape mismatch");
    const std::size_t batch = xv.size() / frame;
    Tensor y(xv.shape());
    for (std::size_t n = 0; n < batch; ++n) {
        for (std::size_t i = 0; i < frame; ++i) y[n * frame + i] = (xv[n * frame + i] + b[i]) * s[i];
    }
    return t.push(std::move(y), {x, scale, bias}, [x, scale, bias, frame, batch](Tape& tp, int self) {
        const Tensor& g = tp.grad(self);
        const Tensor& xv = tp.value(x);
        const Tensor& s = tp.value(scale);
        const Tensor& b = tp.value(bias);
        if (tp.requires_grad(x)) {
            Tensor& gx = tp.grad(x);
            for (std::size_t n = 0; n < batch; ++n) {
                for (std::size_t i = 0; i < frame; ++i) gx[n * frame + i] += g[n * frame + i] * s[i];
            }
        }
        if (tp.requires_grad(scale)) {
            Tensor& gs = tp.grad(scale);
            for (std::size_t n = 0; n < batch; ++n) {
                for (std::size_t i = 0; i < frame; ++i) gs[i] += g[n * frame + i] * (xv[n * frame + i] + b[i]);
            }
        }
        if (tp.requires_grad(bias)) {
            Tensor& gb = tp.grad(bias);
            for (std::size_t n = 0; n < batch; ++n) {
                for (std::size_t i = 0; i < frame; ++i) gb[i] += g[n * frame + i] * s[i];
            }
        }
    });
}

Var logabsdet(Tape& t, Var w) {
    const double v = num::logabsdet(t.value(w));
    return t.push(Tensor::scalar(v), {w}, [w](Tape& tp, int self) {
        const double g = tp.grad(self)[0];
        const Tensor inv_t = transpose(inverse(tp.value(w)));
        Tensor& gw = tp.grad(w);
        for (std::size_t i = 0; i < gw.size(); ++i) gw[i] += g * inv_t[i];
    });
}

Var gaussian_logpdf(Tape& t, Var z, std::size_t groups) {
    const Tensor& zv = t.value(z);
    if (groups == 0 || zv.size() % groups != 0) throw ShapeError("gaussian_logpdf: size not divisible by groups");
    const std::size_t block = zv.size() / groups;
    const double half_log_2pi = 0.5 * std::log(2.0 * std::numbers::pi);
    Tensor out = Tensor::matrix(groups, 1);
    for (std::size_t g = 0; g < groups; ++g) {
        double s = 0.0;
        for (std::size_t i = 0; i < block; ++i) {
            const double v = zv[g * block + i];
            s += -0.5 * v * v - half_log_2pi;
        }
        out[g] = s;
    }
    return t.push(std::move(out), {z}, [z, groups, block](Tape& tp, int self) {
        const Tensor& g = tp.grad(self);
        const Tensor& zv = tp.value(z);
        Tensor& gz = tp.grad(z);
        for (std::size_t k = 0; k < groups; ++k) {
            for (std::size_t i = 0; i < block; ++i) gz[k * block + i] -= g[k] * zv[k * block + i];
        }
    });
}

}  // namespace gflow::num::ops
