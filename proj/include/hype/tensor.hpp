#pragma once

#include <cstddef>
#include <functional>
#include <initializer_list>
#include <memory>
#include <span>
#include <string>
#include <vector>

namespace hype {

using Shape = std::vector<std::size_t>;

std::size_t shape_numel(const Shape& shape);
std::string shape_str(const Shape& shape);

namespace detail {

// Leaves elements uninitialized on value-less construction, so op outputs
// that are fully overwritten skip the zero fill.
template <typename T>
struct DefaultInitAllocator : std::allocator<T> {
    template <typename U>
    struct rebind {
        using other = DefaultInitAllocator<U>;
    };
    using std::allocator<T>::allocator;
    template <typename U>
    void construct(U* p) noexcept {
        ::new (static_cast<void*>(p)) U;
    }
    template <typename U, typename... Args>
    void construct(U* p, Args&&... args) {
        ::new (static_cast<void*>(p)) U(std::forward<Args>(args)...);
    }
};

}  // namespace detail

using Buffer = std::vector<double, detail::DefaultInitAllocator<double>>;

namespace detail {

// One vertex of the define-by-run graph. A tensor owns its node; the node
// keeps its parents alive until backward() releases them.
struct TensorNode {
    Shape shape;
    Buffer data;
    Buffer grad;  // empty until a gradient flows in
    bool requires_grad = false;
    std::vector<std::shared_ptr<TensorNode>> parents;
    std::function<void(TensorNode&)> backward_fn;

    Buffer& ensure_grad() {
        if (grad.empty()) grad.assign(data.size(), 0.0);
        return grad;
    }
};

}  // namespace detail

/// Dense row-major array of doubles with optional reverse-mode gradient.
///
/// Copies are shallow: two Tensor handles may refer to the same storage.
/// Use clone() or detach() for an independent copy.
class Tensor {
   public:
    Tensor() = default;

    static Tensor zeros(Shape shape, bool requires_grad = false);
    static Tensor full(Shape shape, double value, bool requires_grad = false);
    static Tensor from(Shape shape, std::span<const double> values, bool requires_grad = false);
    static Tensor from(Shape shape, Buffer values, bool requires_grad = false);
    static Tensor from(Shape shape, std::initializer_list<double> values, bool requires_grad = false) {
        return from(std::move(shape), std::span<const double>(values.begin(), values.size()), requires_grad);
    }
    static Tensor scalar(double value, bool requires_grad = false);

    bool defined() const noexcept { return node_ != nullptr; }
    const Shape& shape() const;
    std::size_t dim(std::size_t axis) const;
    std::size_t rank() const { return shape().size(); }
    std::size_t numel() const;

    std::span<const double> data() const;
    // Only meaningful on leaves (parameters, inputs); writing into an
    // intermediate silently invalidates the recorded graph.
    std::span<double> mutable_data();
    double item() const;
    double at(std::size_t flat_index) const { return data()[flat_index]; }

    bool requires_grad() const;
    void set_requires_grad(bool value);
    bool has_grad() const;
    std::span<const double> grad() const;
    std::span<double> mutable_grad();
    void zero_grad();

    Tensor detach() const;
    Tensor clone() const;

    // For op implementations.
    const std::shared_ptr<detail::TensorNode>& node() const { return node_; }
    explicit Tensor(std::shared_ptr<detail::TensorNode> node) : node_(std::move(node)) {}

   private:
    std::shared_ptr<detail::TensorNode> node_;
};

/// Runs reverse-mode accumulation from a scalar loss into every reachable
/// tensor that requires a gradient. Grads accumulate into leaves; the
/// recorded graph is released afterwards unless retain_graph is set.
void backward(const Tensor& loss, bool retain_graph = false);

bool grad_enabled();

// Disables graph recording on the current thread for its lifetime.
class NoGradGuard {
   public:
    NoGradGuard();
    ~NoGradGuard();
    NoGradGuard(const NoGradGuard&) = delete;
    NoGradGuard& operator=(const NoGradGuard&) = delete;

   private:
    bool previous_;
};

namespace detail {

// Builds the output of a differentiable op. The output records the graph
// only when grad mode is on and some input requires a gradient.
Tensor make_result(Shape shape, Buffer data, std::vector<Tensor> inputs,
                   std::function<void(TensorNode&)> backward_fn);

}  // namespace detail

}  // namespace hype
