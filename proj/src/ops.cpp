#include "opnn/ops.hpp"

#include <cmath>
#include <utility>

namespace opnn {

namespace {

bool track_output(std::initializer_list<const Tensor*> inputs) {
    if (!Tape::active().recording_enabled()) return false;
    for (const Tensor* t : inputs) {
        if (t->requires_grad()) return true;
    }
    return false;
}

void require_same_shape(const Tensor& a, const Tensor& b, const char* op) {
    if (a.shape() != b.shape()) {
        throw DimensionError(std::string(op) + ": shapes " + shape_to_string(a.shape()) + " and " +
                             shape_to_string(b.shape()) + " differ");
    }
}

template <typename Fwd, typename Da, typename Db>
Tensor binary_pointwise(const Tensor& a, const Tensor& b, const char* op, Fwd fwd, Da da, Db db) {
    require_same_shape(a, b, op);
    const auto& av = a.values();
    const auto& bv = b.values();
    std::vector<double> out(av.size());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = fwd(av[i], bv[i]);
    Tensor result(a.shape(), std::move(out), track_output({&a, &b}));
    if (result.requires_grad()) {
        Tape::active().record([a, b, result, da, db]() {
            const auto& go = result.grad();
            const auto& av2 = a.values();
            const auto& bv2 = b.values();
            if (a.requires_grad()) {
                std::vector<double> g(go.size());
                for (std::size_t i = 0; i < g.size(); ++i) g[i] = da(av2[i], bv2[i]) * go[i];
                a.accumulate_grad(g);
            }
            if (b.requires_grad()) {
                std::vector<double> g(go.size());
                for (std::size_t i = 0; i < g.size(); ++i) g[i] = db(av2[i], bv2[i]) * go[i];
                b.accumulate_grad(g);
            }
        });
    }
    return result;
}

template <typename Fwd, typename Dx>
Tensor unary_pointwise(const Tensor& x, Fwd fwd, Dx dx_from_y) {
    const auto& xv = x.values();
    std::vector<double> out(xv.size());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = fwd(xv[i]);
    Tensor result(x.shape(), std::move(out), track_output({&x}));
    if (result.requires_grad()) {
        Tape::active().record([x, result, dx_from_y]() {
            if (!x.requires_grad()) return;
            const auto& go = result.grad();
            const auto& yv = result.values();
            std::vector<double> g(go.size());
            for (std::size_t i = 0; i < g.size(); ++i) g[i] = dx_from_y(yv[i]) * go[i];
            x.accumulate_grad(g);
        });
    }
    return result;
}

double stable_sigmoid(double x) {
    if (x >= 0.0) {
        return 1.0 / (1.0 + std::exp(-x));
    }
    const double e = std::exp(x);
    return e / (1.0 + e);
}

}  // namespace

Tensor matmul(const Tensor& a, const Tensor& b) {
    if (a.ndim() != 2 || b.ndim() != 2) {
        throw DimensionError("matmul: expected 2-d tensors, got " + shape_to_string(a.shape()) + " and " +
                             shape_to_string(b.shape()));
    }
    const std::size_t m = a.shape()[0];
    const std::size_t k = a.shape()[1];
    const std::size_t n = b.shape()[1];
    if (b.shape()[0] != k) {
        throw DimensionError("matmul: inner dimensions disagree, " + shape_to_string(a.shape()) + " x " +
                             shape_to_string(b.shape()));
    }
    const auto& av = a.values();
    const auto& bv = b.values();
    std::vector<double> out(m * n, 0.0);
    for (std::size_t i = 0; i < m; ++i) {
        for (std::size_t kk = 0; kk < k; ++kk) {
            const double aik = av[i * k + kk];
            const double* brow = bv.data() + kk * n;
            double* orow = out.data() + i * n;
            for (std::size_t j = 0; j < n; ++j) orow[j] += aik * brow[j];
        }
    }
    Tensor result({m, n}, std::move(out), track_output({&a, &b}));
    if (result.requires_grad()) {
        Tape::active().record([a, b, result, m, k, n]() {
            const auto& go = result.grad();
            if (a.requires_grad()) {
                // dA = dOut * B^T
                std::vector<double> ga(m * k, 0.0);
                const auto& bv2 = b.values();
                for (std::size_t i = 0; i < m; ++i) {
                    for (std::size_t j = 0; j < n; ++j) {
                        const double g = go[i * n + j];
                        for (std::size_t kk = 0; kk < k; ++kk) ga[i * k + kk] += g * bv2[kk * n + j];
                    }
                }
                a.accumulate_grad(ga);
            }
            if (b.requires_grad()) {
                // dB = A^T * dOut
                std::vector<double> gb(k * n, 0.0);
                const auto& av2 = a.values();
                for (std::size_t i = 0; i < m; ++i) {
                    for (std::size_t kk = 0; kk < k; ++kk) {
                        const double aik = av2[i * k + kk];
                        const double* grow = go.data() + i * n;
                        double* gbrow = gb.data() + kk * n;
                        for (std::size_t j = 0; j < n; ++j) gbrow[j] += aik * grow[j];
                    }
                }
                b.accumulate_grad(gb);
            }
        });
    }
    return result;
}

Tensor conv1d(const Tensor& input, const Tensor& kernel, const Tensor& bias,
              std::size_t dilation, Padding padding) {
    if (input.ndim() != 3) {
        throw DimensionError("conv1d: input must be (batch, in_channels, width), got " +
                             shape_to_string(input.shape()));
    }
    if (kernel.ndim() != 3) {
        throw DimensionError("conv1d: kernel must be (out_channels, in_channels, k), got " +
                             shape_to_string(kernel.shape()));
    }
    if (dilation < 1) throw DimensionError("conv1d: dilation must be >= 1");
    const std::size_t batch = input.shape()[0];
    const std::size_t in_ch = input.shape()[1];
    const std::size_t width = input.shape()[2];
    const std::size_t out_ch = kernel.shape()[0];
    const std::size_t k = kernel.shape()[2];
    if (k < 1) throw DimensionError("conv1d: kernel width must be >= 1");
    if (kernel.shape()[1] != in_ch) {
        throw DimensionError("conv1d: kernel expects " + std::to_string(kernel.shape()[1]) +
                             " input channels, input has " + std::to_string(in_ch));
    }
    if (bias.shape() != std::vector<std::size_t>{out_ch}) {
        throw DimensionError("conv1d: bias shape " + shape_to_string(bias.shape()) + " must be (" +
                             std::to_string(out_ch) + ")");
    }

    const std::size_t span = (k - 1) * dilation;
    std::size_t out_w = 0;
    std::size_t left = 0;  // zeros implicitly added on the left
    if (padding == Padding::Valid) {
        if (width < span + 1) {
            throw DimensionError("conv1d: width " + std::to_string(width) +
                                 " too small for valid padding with kernel span " + std::to_string(span + 1));
        }
        out_w = width - span;
    } else {
        out_w = width;
        left = span / 2;  // extra zero goes on the right when span is odd
    }

    const auto& xv = input.values();
    const auto& wv = kernel.values();
    const auto& bv = bias.values();
    std::vector<double> out(batch * out_ch * out_w);
    for (std::size_t b = 0; b < batch; ++b) {
        for (std::size_t co = 0; co < out_ch; ++co) {
            double* orow = out.data() + (b * out_ch + co) * out_w;
            for (std::size_t ow = 0; ow < out_w; ++ow) {
                double acc = bv[co];
                for (std::size_t ci = 0; ci < in_ch; ++ci) {
                    const double* xrow = xv.data() + (b * in_ch + ci) * width;
                    const double* wrow = wv.data() + (co * in_ch + ci) * k;
                    for (std::size_t kk = 0; kk < k; ++kk) {
                        const std::ptrdiff_t iw =
                            static_cast<std::ptrdiff_t>(ow + kk * dilation) - static_cast<std::ptrdiff_t>(left);
                        if (iw >= 0 && iw < static_cast<std::ptrdiff_t>(width)) {
                            acc += xrow[iw] * wrow[kk];
                        }
                    }
                }
                orow[ow] = acc;
            }
        }
    }

    Tensor result({batch, out_ch, out_w}, std::move(out), track_output({&input, &kernel, &bias}));
    if (result.requires_grad()) {
        Tape::active().record([input, kernel, bias, result, batch, in_ch, width, out_ch, k, out_w, dilation,
                               left]() {
            const auto& go = result.grad();
            const auto& xv2 = input.values();
            const auto& wv2 = kernel.values();
            std::vector<double> gx(input.requires_grad() ? xv2.size() : 0, 0.0);
            std::vector<double> gw(kernel.requires_grad() ? wv2.size() : 0, 0.0);
            std::vector<double> gb(bias.requires_grad() ? out_ch : 0, 0.0);
            for (std::size_t b = 0; b < batch; ++b) {
                for (std::size_t co = 0; co < out_ch; ++co) {
                    const double* grow = go.data() + (b * out_ch + co) * out_w;
                    for (std::size_t ow = 0; ow < out_w; ++ow) {
                        const double g = grow[ow];
                        if (g == 0.0) continue;
                        if (!gb.empty()) gb[co] += g;
                        for (std::size_t ci = 0; ci < in_ch; ++ci) {
                            const std::size_t xbase = (b * in_ch + ci) * width;
                            const std::size_t wbase = (co * in_ch + ci) * k;
                            for (std::size_t kk = 0; kk < k; ++kk) {
                                const std::ptrdiff_t iw = static_cast<std::ptrdiff_t>(ow + kk * dilation) -
                                                          static_cast<std::ptrdiff_t>(left);
                                if (iw < 0 || iw >= static_cast<std::ptrdiff_t>(width)) continue;
                                if (!gx.empty()) gx[xbase + iw] += wv2[wbase + kk] * g;
                                if (!gw.empty()) gw[wbase + kk] += xv2[xbase + iw] * g;
                            }
                        }
                    }
                }
            }
            if (!gx.empty()) input.accumulate_grad(gx);
            if (!gw.empty()) kernel.accumulate_grad(gw);
            if (!gb.empty()) bias.accumulate_grad(gb);
        });
    }
    return result;
}

Tensor add(const Tensor& a, const Tensor& b) {
    return binary_pointwise(
        a, b, "add", [](double x, double y) { return x + y; }, [](double, double) { return 1.0; },
        [](double, double) { return 1.0; });
}

Tensor sub(const Tensor& a, const Tensor& b) {
    return binary_pointwise(
        a, b, "sub", [](double x, double y) { return x - y; }, [](double, double) { return 1.0; },
        [](double, double) { return -1.0; });
}

Tensor mul(const Tensor& a, const Tensor& b) {
    return binary_pointwise(
        a, b, "mul", [](double x, double y) { return x * y; }, [](double, double y) { return y; },
        [](double x, double) { return x; });
}

Tensor sigmoid(const Tensor& x) {
    return unary_pointwise(x, [](double v) { return stable_sigmoid(v); }, [](double y) { return y * (1.0 - y); });
}

Tensor tanh(const Tensor& x) {
    return unary_pointwise(x, [](double v) { return std::tanh(v); }, [](double y) { return 1.0 - y * y; });
}

Tensor add_scalar(const Tensor& a, double c) {
    return unary_pointwise(a, [c](double v) { return v + c; }, [](double) { return 1.0; });
}

Tensor mul_scalar(const Tensor& a, double c) {
    return unary_pointwise(a, [c](double v) { return v * c; }, [c](double) { return c; });
}

namespace {

void require_bcast_shapes(const Tensor& a, const Tensor& b, const char* op) {
    if (a.ndim() < 1 || b.ndim() + 1 != a.ndim() ||
        !std::equal(b.shape().begin(), b.shape().end(), a.shape().begin() + 1)) {
        throw DimensionError(std::string(op) + ": shape " + shape_to_string(b.shape()) +
                             " must equal " + shape_to_string(a.shape()) + " minus its first axis");
    }
}

}  // namespace

Tensor add_bcast(const Tensor& a, const Tensor& b) {
    require_bcast_shapes(a, b, "add_bcast");
    const std::size_t lead = a.shape()[0];
    const std::size_t inner = b.size();
    const auto& av = a.values();
    const auto& bv = b.values();
    std::vector<double> out(av.size());
    for (std::size_t l = 0; l < lead; ++l) {
        for (std::size_t i = 0; i < inner; ++i) out[l * inner + i] = av[l * inner + i] + bv[i];
    }
    Tensor result(a.shape(), std::move(out), track_output({&a, &b}));
    if (result.requires_grad()) {
        Tape::active().record([a, b, result, lead, inner]() {
            const auto& go = result.grad();
            if (a.requires_grad()) a.accumulate_grad(go);
            if (b.requires_grad()) {
                std::vector<double> gb(inner, 0.0);
                for (std::size_t l = 0; l < lead; ++l) {
                    for (std::size_t i = 0; i < inner; ++i) gb[i] += go[l * inner + i];
                }
                b.accumulate_grad(gb);
            }
        });
    }
    return result;
}

Tensor mul_bcast(const Tensor& a, const Tensor& b) {
    require_bcast_shapes(a, b, "mul_bcast");
    const std::size_t lead = a.shape()[0];
    const std::size_t inner = b.size();
    const auto& av = a.values();
    const auto& bv = b.values();
    std::vector<double> out(av.size());
    for (std::size_t l = 0; l < lead; ++l) {
        for (std::size_t i = 0; i < inner; ++i) out[l * inner + i] = av[l * inner + i] * bv[i];
    }
    Tensor result(a.shape(), std::move(out), track_output({&a, &b}));
    if (result.requires_grad()) {
        Tape::active().record([a, b, result, lead, inner]() {
            const auto& go = result.grad();
            const auto& av2 = a.values();
            const auto& bv2 = b.values();
            if (a.requires_grad()) {
                std::vector<double> ga(go.size());
                for (std::size_t l = 0; l < lead; ++l) {
                    for (std::size_t i = 0; i < inner; ++i) ga[l * inner + i] = go[l * inner + i] * bv2[i];
                }
                a.accumulate_grad(ga);
            }
            if (b.requires_grad()) {
                std::vector<double> gb(inner, 0.0);
                for (std::size_t l = 0; l < lead; ++l) {
                    for (std::size_t i = 0; i < inner; ++i) gb[i] += go[l * inner + i] * av2[l * inner + i];
                }
                b.accumulate_grad(gb);
            }
        });
    }
    return result;
}

Tensor concat(const std::vector<Tensor>& tensors, std::size_t axis) {
    if (tensors.empty()) throw DimensionError("concat: needs at least one tensor");
    const auto& first_shape = tensors[0].shape();
    if (axis >= first_shape.size()) {
        throw DimensionError("concat: axis " + std::to_string(axis) + " out of range for shape " +
                             shape_to_string(first_shape));
    }
    std::size_t axis_total = 0;
    for (const Tensor& t : tensors) {
        if (t.ndim() != first_shape.size()) {
            throw DimensionError("concat: rank mismatch between " + shape_to_string(first_shape) + " and " +
                                 shape_to_string(t.shape()));
        }
        for (std::size_t d = 0; d < first_shape.size(); ++d) {
            if (d != axis && t.shape()[d] != first_shape[d]) {
                throw DimensionError("concat: shapes " + shape_to_string(first_shape) + " and " +
                                     shape_to_string(t.shape()) + " differ off the concat axis");
            }
        }
        axis_total += t.shape()[axis];
    }

    std::vector<std::size_t> out_shape = first_shape;
    out_shape[axis] = axis_total;
    std::size_t outer = 1;
    for (std::size_t d = 0; d < axis; ++d) outer *= out_shape[d];
    std::size_t inner = 1;
    for (std::size_t d = axis + 1; d < out_shape.size(); ++d) inner *= out_shape[d];

    std::vector<double> out(outer * axis_total * inner);
    std::size_t offset = 0;  // element offset within the concat axis
    for (const Tensor& t : tensors) {
        const std::size_t ax = t.shape()[axis];
        const auto& tv = t.values();
        for (std::size_t o = 0; o < outer; ++o) {
            const double* src = tv.data() + o * ax * inner;
            double* dst = out.data() + (o * axis_total + offset) * inner;
            std::copy(src, src + ax * inner, dst);
        }
        offset += ax;
    }

    bool track = false;
    if (Tape::active().recording_enabled()) {
        for (const Tensor& t : tensors) track = track || t.requires_grad();
    }
    Tensor result(out_shape, std::move(out), track);
    if (result.requires_grad()) {
        Tape::active().record([tensors, result, axis, outer, inner, axis_total]() {
            const auto& go = result.grad();
            std::size_t offset2 = 0;
            for (const Tensor& t : tensors) {
                const std::size_t ax = t.shape()[axis];
                if (t.requires_grad()) {
                    std::vector<double> g(t.size());
                    for (std::size_t o = 0; o < outer; ++o) {
                        const double* src = go.data() + (o * axis_total + offset2) * inner;
                        std::copy(src, src + ax * inner, g.data() + o * ax * inner);
                    }
                    t.accumulate_grad(g);
                }
                offset2 += ax;
            }
        });
    }
    return result;
}

Tensor slice(const Tensor& t, std::size_t axis, std::size_t start, std::size_t stop) {
    const auto& shape = t.shape();
    if (axis >= shape.size()) {
        throw DimensionError("slice: axis " + std::to_string(axis) + " out of range for shape " +
                             shape_to_string(shape));
    }
    if (start >= stop || stop > shape[axis]) {
        throw DimensionError("slice: range [" + std::to_string(start) + "," + std::to_string(stop) +
                             ") invalid for axis extent " + std::to_string(shape[axis]));
    }
    std::size_t outer = 1;
    for (std::size_t d = 0; d < axis; ++d) outer *= shape[d];
    std::size_t inner = 1;
    for (std::size_t d = axis + 1; d < shape.size(); ++d) inner *= shape[d];
    const std::size_t ax_in = shape[axis];
    const std::size_t ax_out = stop - start;

    const auto& tv = t.values();
    std::vector<double> out(outer * ax_out * inner);
    for (std::size_t o = 0; o < outer; ++o) {
        const double* src = tv.data() + (o * ax_in + start) * inner;
        std::copy(src, src + ax_out * inner, out.data() + o * ax_out * inner);
    }

    std::vector<std::size_t> out_shape = shape;
    out_shape[axis] = ax_out;
    Tensor result(out_shape, std::move(out), track_output({&t}));
    if (result.requires_grad()) {
        Tape::active().record([t, result, outer, inner, ax_in, ax_out, start]() {
            if (!t.requires_grad()) return;
            const auto& go = result.grad();
            std::vector<double> g(t.size(), 0.0);
            for (std::size_t o = 0; o < outer; ++o) {
                const double* src = go.data() + o * ax_out * inner;
                double* dst = g.data() + (o * ax_in + start) * inner;
                for (std::size_t i = 0; i < ax_out * inner; ++i) dst[i] += src[i];
            }
            t.accumulate_grad(g);
        });
    }
    return result;
}

Tensor reshape(const Tensor& t, std::vector<std::size_t> new_shape) {
    if (shape_numel(new_shape) != t.size()) {
        throw DimensionError("reshape: cannot view " + shape_to_string(t.shape()) + " as " +
                             shape_to_string(new_shape));
    }
    Tensor result(std::move(new_shape), t.values(), track_output({&t}));
    if (result.requires_grad()) {
        Tape::active().record([t, result]() {
            if (t.requires_grad()) t.accumulate_grad(result.grad());
        });
    }
    return result;
}

Tensor sum(const Tensor& t) {
    double s = 0.0;
    for (double v : t.values()) s += v;
    Tensor result({}, std::vector<double>{s}, track_output({&t}));
    if (result.requires_grad()) {
        Tape::active().record([t, result]() {
            if (!t.requires_grad()) return;
            std::vector<double> g(t.size(), result.grad()[0]);
            t.accumulate_grad(g);
        });
    }
    return result;
}

Tensor mse_loss(const Tensor& pred, const Tensor& target) {
    require_same_shape(pred, target, "mse_loss");
    const std::size_t n = pred.size();
    if (n == 0) throw DimensionError("mse_loss: empty tensors");
    const auto& pv = pred.values();
    const auto& tv = target.values();
    double acc = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double d = pv[i] - tv[i];
        acc += d * d;
    }
    Tensor result({}, std::vector<double>{acc / static_cast<double>(n)}, track_output({&pred, &target}));
    if (result.requires_grad()) {
        Tape::active().record([pred, target, result, n]() {
            const double go = result.grad()[0];
            const auto& pv2 = pred.values();
            const auto& tv2 = target.values();
            const double scale = 2.0 / static_cast<double>(n) * go;
            if (pred.requires_grad()) {
                std::vector<double> g(n);
                for (std::size_t i = 0; i < n; ++i) g[i] = scale * (pv2[i] - tv2[i]);
                pred.accumulate_grad(g);
            }
            if (target.requires_grad()) {
                std::vector<double> g(n);
                for (std::size_t i = 0; i < n; ++i) g[i] = -scale * (pv2[i] - tv2[i]);
                target.accumulate_grad(g);
            }
        });
    }
    return result;
}

Tensor uniform_fan_in_init(std::vector<std::size_t> shape, std::size_t fan_in, std::mt19937_64& rng) {
    if (fan_in == 0) throw UsageError("uniform_fan_in_init: fan_in must be positive");
    const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
    std::uniform_real_distribution<double> dist(-bound, bound);
    std::vector<double> vals(shape_numel(shape));
    for (double& v : vals) v = dist(rng);
    return Tensor(std::move(shape), std::move(vals), true);
}

}  // namespace opnn
