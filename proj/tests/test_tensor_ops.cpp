#include <cmath>

#include "catch_amalgamated.hpp"
#include "opnn/errors.hpp"
#include "opnn/ops.hpp"
#include "opnn/tensor.hpp"

using namespace opnn;

namespace {

Tensor grad_tensor(std::vector<std::size_t> shape, std::vector<double> values) {
    return Tensor(std::move(shape), std::move(values), true);
}

void reset_tape() { Tape::active().clear(); }

}  // namespace

TEST_CASE("tensor construction and storage semantics") {
    Tensor t({2, 3}, std::vector<double>{1, 2, 3, 4, 5, 6});
    REQUIRE(t.shape() == std::vector<std::size_t>{2, 3});
    REQUIRE(t.size() == 6);
    REQUIRE_FALSE(t.requires_grad());

    SECTION("copies share storage") {
        Tensor alias = t;
        alias.values()[0] = 99.0;
        REQUIRE(t.values()[0] == 99.0);
        REQUIRE(t.same_storage(alias));
    }

    SECTION("data length must match shape") {
        REQUIRE_THROWS_AS(Tensor({2, 2}, std::vector<double>{1, 2, 3}), DimensionError);
    }

    SECTION("item() wants a scalar") {
        REQUIRE(Tensor::scalar(2.5).item() == 2.5);
        REQUIRE_THROWS_AS(t.item(), UsageError);
    }

    SECTION("factories") {
        REQUIRE(Tensor::zeros({3}).values() == std::vector<double>{0, 0, 0});
        REQUIRE(Tensor::ones({2}).values() == std::vector<double>{1, 1});
    }

    SECTION("grad access requires tracking") {
        REQUIRE_THROWS_AS(t.grad(), UsageError);
        Tensor g({2}, std::vector<double>{1, 2}, true);
        REQUIRE(g.grad() == std::vector<double>{0, 0});
        g.accumulate_grad({1, 2});
        g.accumulate_grad({1, 2});
        REQUIRE(g.grad() == std::vector<double>{2, 4});  // gradients accumulate
        g.zero_grad();
        REQUIRE(g.grad() == std::vector<double>{0, 0});
        REQUIRE_THROWS_AS(g.accumulate_grad({1.0}), DimensionError);
    }
}

TEST_CASE("matmul forward and backward") {
    reset_tape();
    Tensor a = grad_tensor({2, 3}, {1, 2, 3, 4, 5, 6});
    Tensor b = grad_tensor({3, 2}, {7, 8, 9, 10, 11, 12});

    Tensor c = matmul(a, b);
    REQUIRE(c.shape() == std::vector<std::size_t>{2, 2});
    // row0 = [1*7+2*9+3*11, 1*8+2*10+3*12] = [58, 64]
    REQUIRE(c.values() == std::vector<double>{58, 64, 139, 154});

    backward(sum(c));
    // d(sum(AB))/dA = ones * B^T: row i = [b00+b01, b10+b11, b20+b21] = [15, 19, 23]
    REQUIRE(a.grad() == std::vector<double>{15, 19, 23, 15, 19, 23});
    // d/dB = A^T * ones: col sums of A per row of B
    REQUIRE(b.grad() == std::vector<double>{5, 5, 7, 7, 9, 9});
    reset_tape();

    SECTION("shape validation") {
        REQUIRE_THROWS_AS(matmul(a, grad_tensor({2, 2}, {1, 2, 3, 4})), DimensionError);
        REQUIRE_THROWS_AS(matmul(a, grad_tensor({3}, {1, 2, 3})), DimensionError);
    }
}

TEST_CASE("conv1d cross-correlation") {
    reset_tape();

    SECTION("valid padding") {
        Tensor x({1, 1, 3}, std::vector<double>{1, 2, 3});
        Tensor w({1, 1, 2}, std::vector<double>{1, 1});
        Tensor b = Tensor::zeros({1});
        Tensor y = conv1d(x, w, b, 1, Padding::Valid);
        REQUIRE(y.shape() == std::vector<std::size_t>{1, 1, 2});
        REQUIRE(y.values() == std::vector<double>{3, 5});
    }

    SECTION("dilation widens the span") {
        Tensor x({1, 1, 5}, std::vector<double>{1, 2, 3, 4, 5});
        Tensor w({1, 1, 2}, std::vector<double>{1, 1});
        Tensor y = conv1d(x, w, Tensor::zeros({1}), 2, Padding::Valid);
        REQUIRE(y.values() == std::vector<double>{4, 6, 8});  // x[i] + x[i+2]
    }

    SECTION("same padding keeps width, extra zero on the right") {
        Tensor x({1, 1, 4}, std::vector<double>{1, 2, 3, 4});
        Tensor w({1, 1, 2}, std::vector<double>{1, 1});
        Tensor y = conv1d(x, w, Tensor::zeros({1}), 1, Padding::Same);
        // span 1 -> no left pad, one implicit zero after x[3]
        REQUIRE(y.values() == std::vector<double>{3, 5, 7, 4});
    }

    SECTION("same padding, odd kernel is symmetric") {
        Tensor x({1, 1, 3}, std::vector<double>{1, 2, 3});
        Tensor w({1, 1, 3}, std::vector<double>{1, 1, 1});
        Tensor y = conv1d(x, w, Tensor::zeros({1}), 1, Padding::Same);
        REQUIRE(y.values() == std::vector<double>{3, 6, 5});
    }

    SECTION("bias is added per output channel") {
        Tensor x({1, 1, 3}, std::vector<double>{1, 2, 3});
        Tensor w({2, 1, 1}, std::vector<double>{1, 2});
        Tensor b({2}, std::vector<double>{10, 20});
        Tensor y = conv1d(x, w, b, 1, Padding::Valid);
        REQUIRE(y.values() == std::vector<double>{11, 12, 13, 22, 24, 26});
    }

    SECTION("multi-channel accumulates over input channels") {
        Tensor x({1, 2, 2}, std::vector<double>{1, 2, 3, 4});
        Tensor w({1, 2, 1}, std::vector<double>{10, 100});
        Tensor y = conv1d(x, w, Tensor::zeros({1}), 1, Padding::Valid);
        REQUIRE(y.values() == std::vector<double>{310, 420});
    }

    SECTION("width too small for valid padding") {
        Tensor x({1, 1, 2}, std::vector<double>{1, 2});
        Tensor w({1, 1, 3}, std::vector<double>{1, 1, 1});
        REQUIRE_THROWS_AS(conv1d(x, w, Tensor::zeros({1}), 1, Padding::Valid), DimensionError);
    }

    SECTION("backward distributes through the window") {
        Tensor x = grad_tensor({1, 1, 3}, {1, 2, 3});
        Tensor w = grad_tensor({1, 1, 2}, {5, 7});
        Tensor b = grad_tensor({1}, {0});
        backward(sum(conv1d(x, w, b, 1, Padding::Valid)));
        // y0 = 5x0+7x1, y1 = 5x1+7x2
        REQUIRE(x.grad() == std::vector<double>{5, 12, 7});
        REQUIRE(w.grad() == std::vector<double>{1 + 2, 2 + 3});
        REQUIRE(b.grad() == std::vector<double>{2});
        reset_tape();
    }
}

TEST_CASE("pointwise ops") {
    reset_tape();
    Tensor a = grad_tensor({3}, {1, 2, 3});
    Tensor b = grad_tensor({3}, {10, 20, 30});

    REQUIRE(add(a, b).values() == std::vector<double>{11, 22, 33});
    REQUIRE(sub(b, a).values() == std::vector<double>{9, 18, 27});
    REQUIRE(mul(a, b).values() == std::vector<double>{10, 40, 90});
    reset_tape();

    SECTION("shape mismatch rejected") {
        Tensor c({2}, std::vector<double>{1, 2});
        REQUIRE_THROWS_AS(add(a, c), DimensionError);
        REQUIRE_THROWS_AS(mul(a, c), DimensionError);
    }

    SECTION("mul backward routes each operand's values to the other") {
        backward(sum(mul(a, b)));
        REQUIRE(a.grad() == std::vector<double>{10, 20, 30});
        REQUIRE(b.grad() == std::vector<double>{1, 2, 3});
        reset_tape();
    }

    SECTION("scalar broadcasting is explicit") {
        REQUIRE(add_scalar(a, 1.5).values() == std::vector<double>{2.5, 3.5, 4.5});
        REQUIRE(mul_scalar(a, -2.0).values() == std::vector<double>{-2, -4, -6});
        reset_tape();
    }
}

TEST_CASE("activations") {
    reset_tape();
    Tensor x = grad_tensor({3}, {-100.0, 0.0, 100.0});

    SECTION("sigmoid saturates stably") {
        Tensor y = sigmoid(x);
        REQUIRE(y.values()[0] == Catch::Approx(0.0).margin(1e-30));
        REQUIRE(y.values()[1] == 0.5);
        REQUIRE(y.values()[2] == Catch::Approx(1.0));
        REQUIRE(std::isfinite(y.values()[0]));
    }

    SECTION("tanh values") {
        Tensor y = tanh(grad_tensor({2}, {0.0, 1.0}));
        REQUIRE(y.values()[0] == 0.0);
        REQUIRE(y.values()[1] == Catch::Approx(std::tanh(1.0)));
    }

    SECTION("sigmoid backward uses y(1-y)") {
        Tensor z = grad_tensor({1}, {0.3});
        backward(sum(sigmoid(z)));
        const double y = 1.0 / (1.0 + std::exp(-0.3));
        REQUIRE(z.grad()[0] == Catch::Approx(y * (1 - y)).epsilon(1e-12));
        reset_tape();
    }

    reset_tape();
}

TEST_CASE("leading-axis broadcast ops") {
    reset_tape();
    Tensor a = grad_tensor({2, 3}, {1, 2, 3, 4, 5, 6});
    Tensor b = grad_tensor({3}, {10, 20, 30});

    SECTION("add_bcast applies b to every slice") {
        REQUIRE(add_bcast(a, b).values() == std::vector<double>{11, 22, 33, 14, 25, 36});
    }

    SECTION("mul_bcast scales every slice") {
        REQUIRE(mul_bcast(a, b).values() == std::vector<double>{10, 40, 90, 40, 100, 180});
    }

    SECTION("backward sums over the leading axis") {
        backward(sum(add_bcast(a, b)));
        REQUIRE(a.grad() == std::vector<double>{1, 1, 1, 1, 1, 1});
        REQUIRE(b.grad() == std::vector<double>{2, 2, 2});
        reset_tape();
        a.zero_grad();
        b.zero_grad();

        backward(sum(mul_bcast(a, b)));
        REQUIRE(a.grad() == std::vector<double>{10, 20, 30, 10, 20, 30});
        REQUIRE(b.grad() == std::vector<double>{1 + 4, 2 + 5, 3 + 6});
        reset_tape();
    }

    SECTION("shape rule: b must equal a's shape minus the first axis") {
        REQUIRE_THROWS_AS(add_bcast(a, grad_tensor({2}, {1, 2})), DimensionError);
        REQUIRE_THROWS_AS(mul_bcast(a, grad_tensor({2, 3}, {1, 2, 3, 4, 5, 6})), DimensionError);
    }
}

TEST_CASE("concat, slice, reshape, sum") {
    reset_tape();
    Tensor a = grad_tensor({2, 2}, {1, 2, 3, 4});
    Tensor b = grad_tensor({2, 2}, {5, 6, 7, 8});

    SECTION("concat along axis 1") {
        Tensor c = concat({a, b}, 1);
        REQUIRE(c.shape() == std::vector<std::size_t>{2, 4});
        REQUIRE(c.values() == std::vector<double>{1, 2, 5, 6, 3, 4, 7, 8});
    }

    SECTION("concat along axis 0") {
        Tensor c = concat({a, b}, 0);
        REQUIRE(c.shape() == std::vector<std::size_t>{4, 2});
        REQUIRE(c.values() == std::vector<double>{1, 2, 3, 4, 5, 6, 7, 8});
    }

    SECTION("concat backward splits the gradient") {
        Tensor w({2, 4}, std::vector<double>{1, 2, 3, 4, 5, 6, 7, 8});
        backward(sum(mul(concat({a, b}, 1), w)));
        REQUIRE(a.grad() == std::vector<double>{1, 2, 5, 6});
        REQUIRE(b.grad() == std::vector<double>{3, 4, 7, 8});
        reset_tape();
    }

    SECTION("concat validates shapes") {
        REQUIRE_THROWS_AS(concat({a, grad_tensor({3}, {1, 2, 3})}, 0), DimensionError);
        REQUIRE_THROWS_AS(concat({}, 0), DimensionError);
    }

    SECTION("slice is a half-open window") {
        Tensor s = slice(a, 1, 1, 2);
        REQUIRE(s.shape() == std::vector<std::size_t>{2, 1});
        REQUIRE(s.values() == std::vector<double>{2, 4});
        REQUIRE_THROWS_AS(slice(a, 1, 1, 1), DimensionError);
        REQUIRE_THROWS_AS(slice(a, 1, 1, 3), DimensionError);
        REQUIRE_THROWS_AS(slice(a, 2, 0, 1), DimensionError);
    }

    SECTION("slice backward scatters into place") {
        backward(sum(slice(a, 0, 1, 2)));
        REQUIRE(a.grad() == std::vector<double>{0, 0, 1, 1});
        reset_tape();
    }

    SECTION("reshape preserves data, checks element count") {
        Tensor r = reshape(a, {4});
        REQUIRE(r.values() == std::vector<double>{1, 2, 3, 4});
        REQUIRE_THROWS_AS(reshape(a, {3}), DimensionError);
    }

    SECTION("sum reduces to a scalar") {
        Tensor s = sum(a);
        REQUIRE(s.shape().empty());
        REQUIRE(s.item() == 10.0);
        backward(s);
        REQUIRE(a.grad() == std::vector<double>{1, 1, 1, 1});
        reset_tape();
    }
}

TEST_CASE("mse_loss") {
    reset_tape();
    Tensor pred = grad_tensor({3, 1}, {2, 2, 2});
    Tensor target({3, 1}, std::vector<double>{1, 2, 3});

    Tensor loss = mse_loss(pred, target);
    REQUIRE(loss.item() == Catch::Approx(2.0 / 3.0).epsilon(1e-15));

    backward(loss);
    // d/dpred = (2/N)(pred - target)
    REQUIRE(pred.grad()[0] == Catch::Approx(2.0 / 3.0).epsilon(1e-12));
    REQUIRE(pred.grad()[1] == 0.0);
    REQUIRE(pred.grad()[2] == Catch::Approx(-2.0 / 3.0).epsilon(1e-12));
    reset_tape();

    REQUIRE_THROWS_AS(mse_loss(pred, Tensor({2, 1}, std::vector<double>{1, 2})), DimensionError);
}

TEST_CASE("tape mechanics") {
    reset_tape();
    Tape& tape = Tape::active();

    SECTION("NoGradScope suppresses recording and tracking") {
        Tensor a = grad_tensor({2}, {1, 2});
        {
            NoGradScope guard;
            Tensor y = add(a, a);
            REQUIRE_FALSE(y.requires_grad());
            REQUIRE(tape.size() == 0);
        }
        Tensor y = add(a, a);
        REQUIRE(y.requires_grad());
        REQUIRE(tape.size() == 1);
        reset_tape();
    }

    SECTION("ops on untracked tensors record nothing") {
        Tensor a({2}, std::vector<double>{1, 2});
        Tensor y = mul(a, a);
        REQUIRE_FALSE(y.requires_grad());
        REQUIRE(tape.size() == 0);
    }

    SECTION("backward demands a scalar and a nonempty tape") {
        Tensor a = grad_tensor({2}, {1, 2});
        REQUIRE_THROWS_AS(backward(a), UsageError);  // not scalar
        REQUIRE_THROWS_AS(backward(Tensor::scalar(1.0, true)), UsageError);  // empty tape
    }

    SECTION("gradients from separate passes accumulate") {
        Tensor a = grad_tensor({2}, {3, 4});
        backward(sum(mul(a, a)));
        REQUIRE(a.grad() == std::vector<double>{6, 8});  // 2a
        reset_tape();
        backward(sum(mul(a, a)));  // second pass adds on top
        REQUIRE(a.grad() == std::vector<double>{12, 16});
        reset_tape();
    }
}
