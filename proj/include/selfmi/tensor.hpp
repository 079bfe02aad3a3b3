#pragma once

#include <cstddef>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "selfmi/errors.hpp"
#include "selfmi/rng.hpp"

namespace selfmi {

using Shape = std::vector<std::size_t>;

std::string shape_str(const Shape& s);

namespace detail {

struct TensorData {
    Shape shape;
    std::vector<double> values;
    std::vector<double> grad;  // empty until the tensor joins a backward pass
    bool requires_grad = false;
    int node = -1;  // id of the tape node that produced this tensor, -1 for leaves
};

using DataPtr = std::shared_ptr<TensorData>;

}  // namespace detail

// Dense f64 tensor participating in a define-by-run autodiff tape.
// Copies share storage; ops create fresh tensors.
class Tensor {
  public:
    Tensor() = default;

    static Tensor zeros(Shape shape, bool requires_grad = false);
    static Tensor full(Shape shape, double value, bool requires_grad = false);
    static Tensor from_values(Shape shape, std::vector<double> values,
                              bool requires_grad = false);
    static Tensor scalar(double value);
    static Tensor eye(std::size_t n);
    static Tensor uniform(Shape shape, double lo, double hi, Rng& rng,
                          bool requires_grad = false);

    bool defined() const { return data_ != nullptr; }
    const Shape& shape() const;
    std::size_t rank() const { return shape().size(); }
    std::size_t size() const;
    std::size_t rows() const;  // extent 0
    std::size_t cols() const;  // extent 1 (rank-2 only)

    bool requires_grad() const;
    void set_requires_grad(bool v);  // leaves only

    std::span<const double> values() const;
    std::span<double> values_mut();  // leaf in-place mutation (optimizer, FD probes)
    bool has_grad() const;
    std::span<const double> grad() const;
    void zero_grad();

    double item() const;  // size-1 tensors
    double at(std::size_t i) const;
    double at(std::size_t i, std::size_t j) const;

    // Copy of the values with no grad and no tape history.
    Tensor detached() const;

    detail::DataPtr data() const { return data_; }

  private:
    explicit Tensor(detail::DataPtr d) : data_(std::move(d)) {}
    detail::DataPtr data_;

    friend Tensor wrap(detail::DataPtr);
};

// --- tape -------------------------------------------------------------

// Records one node per differentiable op, in execution order (which is a
// topological order by construction). backward() walks it in reverse,
// visiting each node exactly once. Rebuilt per forward pass; one tape per
// thread, concurrent mutation of a single tape is forbidden by contract.
class Tape {
  public:
    static Tape& active();

    void clear();
    std::size_t node_count() const { return nodes_.size(); }
    bool recording() const { return recording_; }

    int record(const char* op, const std::vector<Tensor>& inputs,
               const Tensor& output, std::function<void()> pull);
    void backward_from(int node_id);
    void zero_intermediates(int node_id);

  private:
    struct Node {
        const char* op;
        std::vector<int> input_ids;
        int output_id;
        detail::DataPtr out;
        std::function<void()> pull;
    };
    std::vector<Node> nodes_;
    bool recording_ = true;

    friend struct NoGradGuard;
};

// Scope in which ops compute values only (no recording, outputs are
// constants). Used for evaluation passes and finite-difference probes.
struct NoGradGuard {
    NoGradGuard();
    ~NoGradGuard();
    NoGradGuard(const NoGradGuard&) = delete;
    NoGradGuard& operator=(const NoGradGuard&) = delete;

  private:
    bool prev_;
};

// Seeds d(loss)/d(loss) = 1 and propagates through the active tape.
// Repeated calls without zero_grad accumulate.
void backward(const Tensor& loss);

namespace detail {

// True when the active tape is recording and any input requires grad.
bool op_needs_tape(std::initializer_list<const Tensor*> inputs);

// Ensures grad buffers, marks `out` as requiring grad, and records the node.
// `pull` must accumulate into input grads using out's grad.
void record_op(const char* op, std::initializer_list<const Tensor*> inputs,
               Tensor& out, std::function<void()> pull);

void ensure_grad(TensorData& d);

}  // namespace detail

// --- ops ----------------------------------------------------------------

// matmul: [m×k]·[k×n] -> [m×n], or [m×k]·[k] -> [m].
Tensor matmul(const Tensor& a, const Tensor& b);
Tensor transpose(const Tensor& a);

Tensor relu(const Tensor& x);
Tensor tanh(const Tensor& x);
Tensor sigmoid(const Tensor& x);
Tensor exp(const Tensor& x);
Tensor log(const Tensor& x);  // strictly positive inputs
Tensor abs(const Tensor& x);  // subgradient 0 at 0

Tensor add(const Tensor& a, const Tensor& b);
Tensor sub(const Tensor& a, const Tensor& b);
Tensor mul(const Tensor& a, const Tensor& b);
Tensor scale(const Tensor& x, double c);

// mat [N×d] + row [d], broadcast over rows (bias add).
Tensor add_rowwise(const Tensor& mat, const Tensor& row);

// Row i of x_i - logsumexp(x_i), max-subtracted.
Tensor log_softmax_rows(const Tensor& x);

Tensor sum(const Tensor& x);   // -> [1]
Tensor mean(const Tensor& x);  // -> [1]

Tensor concat_cols(std::span<const Tensor> parts);
Tensor row(const Tensor& mat, std::size_t i);
Tensor stack_rows(std::span<const Tensor> rows);
Tensor slice(const Tensor& vec, std::size_t start, std::size_t len);

// Inverted dropout with a seeded mask; identity when rate == 0.
Tensor dropout(const Tensor& x, double rate, Rng& rng);

// --- gradient checking ----------------------------------------------------

struct GradCheckReport {
    double max_rel_err = 0.0;
    bool pass = true;
    std::size_t worst_index = 0;
    double analytic = 0.0;
    double numeric = 0.0;
};

// Central finite differences vs autodiff for a scalar-valued f at x.
// Relative error uses denominator max(|analytic|, |numeric|, 1e-3).
// Clears and reuses the active tape.
GradCheckReport grad_check(const std::function<Tensor(const Tensor&)>& f,
                           Tensor x, double step, double tol);

namespace testing {
// Gradcheck fixture: multiplies the named op's upstream gradient by
// (1 + perturbation) during backward. Empty name disables.
void set_backward_fault(std::string op, double perturbation);
}  // namespace testing

}  // namespace selfmi
