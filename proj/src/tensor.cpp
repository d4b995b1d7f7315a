#include "opnn/tensor.hpp"

#include <numeric>
#include <sstream>

namespace opnn {

std::size_t shape_numel(const std::vector<std::size_t>& shape) {
    std::size_t n = 1;
    for (std::size_t d : shape) n *= d;
    return n;
}

std::string shape_to_string(const std::vector<std::size_t>& shape) {
    std::ostringstream os;
    os << "(";
    for (std::size_t i = 0; i < shape.size(); ++i) {
        if (i) os << ",";
        os << shape[i];
    }
    os << ")";
    return os.str();
}

Tensor::Tensor(std::vector<std::size_t> shape, std::vector<double> values, bool requires_grad)
    : impl_(std::make_shared<detail::TensorImpl>()) {
    const std::size_t n = shape_numel(shape);
    if (values.size() != n) {
        throw DimensionError("tensor data length " + std::to_string(values.size()) +
                             " does not match shape " + shape_to_string(shape));
    }
    impl_->shape = std::move(shape);
    impl_->data = std::move(values);
    impl_->requires_grad = requires_grad;
    if (requires_grad) impl_->grad.assign(n, 0.0);
}

Tensor::Tensor(std::vector<std::size_t> shape, double fill, bool requires_grad)
    : impl_(std::make_shared<detail::TensorImpl>()) {
    const std::size_t n = shape_numel(shape);
    impl_->shape = std::move(shape);
    impl_->data.assign(n, fill);
    impl_->requires_grad = requires_grad;
    if (requires_grad) impl_->grad.assign(n, 0.0);
}

Tensor Tensor::scalar(double value, bool requires_grad) {
    return Tensor({}, std::vector<double>{value}, requires_grad);
}

Tensor Tensor::zeros(std::vector<std::size_t> shape, bool requires_grad) {
    return Tensor(std::move(shape), 0.0, requires_grad);
}

Tensor Tensor::ones(std::vector<std::size_t> shape, bool requires_grad) {
    return Tensor(std::move(shape), 1.0, requires_grad);
}

void Tensor::require_defined() const {
    if (!impl_) throw UsageError("operation on a default-constructed tensor");
}

const std::vector<std::size_t>& Tensor::shape() const {
    require_defined();
    return impl_->shape;
}

std::size_t Tensor::size() const {
    require_defined();
    return impl_->data.size();
}

bool Tensor::requires_grad() const {
    require_defined();
    return impl_->requires_grad;
}

std::vector<double>& Tensor::values() const {
    require_defined();
    return impl_->data;
}

std::vector<double>& Tensor::grad() const {
    require_defined();
    if (!impl_->requires_grad) throw UsageError("grad() on a tensor with requires_grad=false");
    return impl_->grad;
}

void Tensor::zero_grad() const {
    require_defined();
    if (impl_->requires_grad) std::fill(impl_->grad.begin(), impl_->grad.end(), 0.0);
}

void Tensor::accumulate_grad(const std::vector<double>& g) const {
    require_defined();
    if (!impl_->requires_grad) return;
    if (g.size() != impl_->grad.size()) {
        throw DimensionError("gradient length " + std::to_string(g.size()) +
                             " does not match tensor size " + std::to_string(impl_->grad.size()));
    }
    for (std::size_t i = 0; i < g.size(); ++i) impl_->grad[i] += g[i];
}

double Tensor::item() const {
    require_defined();
    if (impl_->data.size() != 1) {
        throw UsageError("item() requires a scalar tensor, got shape " + shape_to_string(impl_->shape));
    }
    return impl_->data[0];
}

Tape& Tape::active() {
    thread_local Tape tape;
    return tape;
}

void Tape::record(std::function<void()> backward_step) {
    if (disable_depth_ == 0) records_.push_back(std::move(backward_step));
}

void Tape::clear() { records_.clear(); }

void Tape::replay_backward() {
    for (auto it = records_.rbegin(); it != records_.rend(); ++it) (*it)();
}

NoGradScope::NoGradScope() { ++Tape::active().disable_depth_; }
NoGradScope::~NoGradScope() { --Tape::active().disable_depth_; }

void backward(const Tensor& loss) {
    if (loss.size() != 1) {
        throw UsageError("backward() requires a scalar loss, got shape " + shape_to_string(loss.shape()));
    }
    Tape& tape = Tape::active();
    if (tape.size() == 0) throw UsageError("backward() on an empty tape");
    if (loss.requires_grad()) loss.accumulate_grad({1.0});
    tape.replay_backward();
}

}  // namespace opnn
