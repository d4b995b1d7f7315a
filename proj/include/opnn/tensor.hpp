#pragma once

#include <cstddef>
#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "opnn/errors.hpp"

namespace opnn {

namespace detail {

struct TensorImpl {
    std::vector<std::size_t> shape;
    std::vector<double> data;      // row-major, last axis fastest
    bool requires_grad = false;
    std::vector<double> grad;      // same length as data when requires_grad
};

}  // namespace detail

std::size_t shape_numel(const std::vector<std::size_t>& shape);
std::string shape_to_string(const std::vector<std::size_t>& shape);

// Dense double-precision tensor handle. Copies share the underlying storage,
// so a Tensor held in a parameter map and the one seen by an optimizer are
// the same object. Gradient storage exists iff requires_grad.
class Tensor {
public:
    Tensor() = default;
    Tensor(std::vector<std::size_t> shape, std::vector<double> values, bool requires_grad = false);
    Tensor(std::vector<std::size_t> shape, double fill = 0.0, bool requires_grad = false);

    static Tensor scalar(double value, bool requires_grad = false);
    static Tensor zeros(std::vector<std::size_t> shape, bool requires_grad = false);
    static Tensor ones(std::vector<std::size_t> shape, bool requires_grad = false);

    bool defined() const { return impl_ != nullptr; }
    const std::vector<std::size_t>& shape() const;
    std::size_t ndim() const { return shape().size(); }
    std::size_t size() const;
    bool requires_grad() const;

    // Handle-const, payload-mutable: a const Tensor is a const handle to
    // shared storage, so value/gradient access does not need a mutable handle.
    std::vector<double>& values() const;

    // Gradient buffer; UsageError when the tensor does not track gradients.
    std::vector<double>& grad() const;
    void zero_grad() const;
    void accumulate_grad(const std::vector<double>& g) const;

    double item() const;

    // Stable identity of the shared storage (used by the optimizer and tests).
    const detail::TensorImpl* impl() const { return impl_.get(); }

    bool same_storage(const Tensor& other) const { return impl_ == other.impl_; }

private:
    std::shared_ptr<detail::TensorImpl> impl_;
    void require_defined() const;
};

// Reverse-mode tape. Forward operations append one record apiece; backward
// replays the records in reverse order, accumulating into .grad of every
// tracked tensor reachable from the loss. Cleared between training steps.
class Tape {
public:
    static Tape& active();

    void record(std::function<void()> backward_step);
    void clear();
    std::size_t size() const { return records_.size(); }
    bool recording_enabled() const { return disable_depth_ == 0; }

    // Runs every record in reverse recording order.
    void replay_backward();

private:
    friend class NoGradScope;
    std::vector<std::function<void()>> records_;
    int disable_depth_ = 0;
};

// Disables tape recording (and gradient tracking of op outputs) while alive.
class NoGradScope {
public:
    NoGradScope();
    ~NoGradScope();
    NoGradScope(const NoGradScope&) = delete;
    NoGradScope& operator=(const NoGradScope&) = delete;
};

// Seeds d(loss)/d(loss) = 1 and replays the active tape backwards.
// The loss must be a scalar and the tape nonempty.
void backward(const Tensor& loss);

}  // namespace opnn
