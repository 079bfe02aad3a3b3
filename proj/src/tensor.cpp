#include "selfmi/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <numeric>
#include <sstream>

namespace selfmi {

std::string shape_str(const Shape& s) {
    std::ostringstream os;
    os << '[';
    for (std::size_t i = 0; i < s.size(); ++i) {
        if (i) os << 'x';
        os << s[i];
    }
    os << ']';
    return os.str();
}

namespace {

std::size_t shape_size(const Shape& s) {
    std::size_t n = 1;
    for (std::size_t e : s) n *= e;
    return n;
}

detail::DataPtr make_data(Shape shape, std::vector<double> values,
                          bool requires_grad) {
    auto d = std::make_shared<detail::TensorData>();
    d->shape = std::move(shape);
    d->values = std::move(values);
    d->requires_grad = requires_grad;
    if (shape_size(d->shape) != d->values.size()) {
        throw ShapeError("tensor: " + shape_str(d->shape) + " cannot hold " +
                         std::to_string(d->values.size()) + " values");
    }
    for (std::size_t e : d->shape) {
        if (e == 0) throw ShapeError("tensor: zero extent in " + shape_str(d->shape));
    }
    return d;
}

struct BackwardFault {
    std::string op;
    double perturbation = 0.0;
};

BackwardFault& fault() {
    static BackwardFault f;
    return f;
}

}  // namespace

Tensor wrap(detail::DataPtr d) { return Tensor(std::move(d)); }

Tensor Tensor::zeros(Shape shape, bool requires_grad) {
    std::size_t n = shape_size(shape);
    return from_values(std::move(shape), std::vector<double>(n, 0.0), requires_grad);
}

Tensor Tensor::full(Shape shape, double value, bool requires_grad) {
    std::size_t n = shape_size(shape);
    return from_values(std::move(shape), std::vector<double>(n, value), requires_grad);
}

Tensor Tensor::from_values(Shape shape, std::vector<double> values,
                           bool requires_grad) {
    Tensor t = wrap(make_data(std::move(shape), std::move(values), requires_grad));
    if (requires_grad) detail::ensure_grad(*t.data_);
    return t;
}

Tensor Tensor::scalar(double value) { return from_values({1}, {value}); }

Tensor Tensor::eye(std::size_t n) {
    std::vector<double> v(n * n, 0.0);
    for (std::size_t i = 0; i < n; ++i) v[i * n + i] = 1.0;
    return from_values({n, n}, std::move(v));
}

Tensor Tensor::uniform(Shape shape, double lo, double hi, Rng& rng,
                       bool requires_grad) {
    std::size_t n = shape_size(shape);
    std::vector<double> v(n);
    for (auto& x : v) x = rng.uniform(lo, hi);
    return from_values(std::move(shape), std::move(v), requires_grad);
}

const Shape& Tensor::shape() const {
    if (!data_) throw ContractError("use of an undefined tensor");
    return data_->shape;
}

std::size_t Tensor::size() const { return shape_size(shape()); }

std::size_t Tensor::rows() const {
    if (rank() < 1) throw ShapeError("rows(): rank-0 tensor");
    return shape()[0];
}

std::size_t Tensor::cols() const {
    if (rank() != 2) throw ShapeError("cols() on non-matrix " + shape_str(shape()));
    return shape()[1];
}

bool Tensor::requires_grad() const { return data_ && data_->requires_grad; }

void Tensor::set_requires_grad(bool v) {
    if (!data_) throw ContractError("use of an undefined tensor");
    if (data_->node >= 0)
        throw ContractError("set_requires_grad on a non-leaf tensor");
    data_->requires_grad = v;
    if (v) detail::ensure_grad(*data_);
}

std::span<const double> Tensor::values() const {
    if (!data_) throw ContractError("use of an undefined tensor");
    return data_->values;
}

std::span<double> Tensor::values_mut() {
    if (!data_) throw ContractError("use of an undefined tensor");
    return data_->values;
}

bool Tensor::has_grad() const { return data_ && !data_->grad.empty(); }

std::span<const double> Tensor::grad() const {
    if (!has_grad())
        throw ContractError("grad(): tensor has no gradient buffer");
    return data_->grad;
}

void Tensor::zero_grad() {
    if (data_ && !data_->grad.empty())
        std::fill(data_->grad.begin(), data_->grad.end(), 0.0);
}

double Tensor::item() const {
    if (size() != 1)
        throw ContractError("item() on tensor of size " + std::to_string(size()));
    return data_->values[0];
}

double Tensor::at(std::size_t i) const { return data_->values.at(i); }

double Tensor::at(std::size_t i, std::size_t j) const {
    if (rank() != 2) throw ShapeError("at(i,j) on " + shape_str(shape()));
    return data_->values.at(i * cols() + j);
}

Tensor Tensor::detached() const {
    if (!data_) throw ContractError("use of an undefined tensor");
    return from_values(data_->shape, data_->values);
}

// --- tape -----------------------------------------------------------------

Tape& Tape::active() {
    thread_local Tape tape;
    return tape;
}

void Tape::clear() { nodes_.clear(); }

int Tape::record(const char* op, const std::vector<Tensor>& inputs,
                 const Tensor& output, std::function<void()> pull) {
    Node n;
    n.op = op;
    for (const Tensor& in : inputs)
        n.input_ids.push_back(in.data() ? in.data()->node : -1);
    n.output_id = static_cast<int>(nodes_.size());
    n.out = output.data();
    const BackwardFault& f = fault();
    if (!f.op.empty() && f.op == op) {
        // Test fixture: corrupt this op's upstream gradient.
        auto out_data = output.data();
        double pert = f.perturbation;
        n.pull = [out_data, pert, inner = std::move(pull)]() {
            std::vector<double> saved = out_data->grad;
            for (double& g : out_data->grad) g *= (1.0 + pert);
            inner();
            out_data->grad = std::move(saved);
        };
    } else {
        n.pull = std::move(pull);
    }
    const int id = n.output_id;
    nodes_.push_back(std::move(n));
    return id;
}

void Tape::backward_from(int node_id) {
    if (node_id < 0 || node_id >= static_cast<int>(nodes_.size()))
        throw ContractError("backward: node id not on the active tape");
    for (int i = node_id; i >= 0; --i) nodes_[static_cast<std::size_t>(i)].pull();
}

void Tape::zero_intermediates(int node_id) {
    // Op outputs get a fresh gradient each pass; only leaves accumulate
    // across repeated backward calls.
    for (int i = 0; i <= node_id && i < static_cast<int>(nodes_.size()); ++i) {
        auto& out = nodes_[static_cast<std::size_t>(i)].out;
        if (out) std::fill(out->grad.begin(), out->grad.end(), 0.0);
    }
}

NoGradGuard::NoGradGuard() : prev_(Tape::active().recording_) {
    Tape::active().recording_ = false;
}

NoGradGuard::~NoGradGuard() { Tape::active().recording_ = prev_; }

void backward(const Tensor& loss) {
    if (loss.size() != 1)
        throw ContractError("backward: loss must be scalar, got " +
                            shape_str(loss.shape()));
    auto d = loss.data();
    if (!d->requires_grad)
        throw ContractError("backward: loss is not on the autodiff tape");
    detail::ensure_grad(*d);
    if (d->node >= 0) {
        Tape::active().zero_intermediates(d->node);
        d->grad[0] = 1.0;
        Tape::active().backward_from(d->node);
    } else {
        d->grad[0] += 1.0;
    }
}

namespace detail {

void ensure_grad(TensorData& d) {
    if (d.grad.empty()) d.grad.assign(d.values.size(), 0.0);
}

bool op_needs_tape(std::initializer_list<const Tensor*> inputs) {
    if (!Tape::active().recording()) return false;
    for (const Tensor* t : inputs)
        if (t->requires_grad()) return true;
    return false;
}

void record_op(const char* op, std::initializer_list<const Tensor*> inputs,
               Tensor& out, std::function<void()> pull) {
    std::vector<Tensor> ins;
    ins.reserve(inputs.size());
    for (const Tensor* t : inputs) {
        if (t->requires_grad()) ensure_grad(*t->data());
        ins.push_back(*t);
    }
    ensure_grad(*out.data());
    out.data()->requires_grad = true;
    out.data()->node = Tape::active().record(op, ins, out, std::move(pull));
}

}  // namespace detail

namespace testing {

void set_backward_fault(std::string op, double perturbation) {
    fault().op = std::move(op);
    fault().perturbation = perturbation;
}

}  // namespace testing

// --- elementwise machinery --------------------------------------------------

namespace {

void check_same_shape(const char* op, const Tensor& a, const Tensor& b) {
    if (a.shape() != b.shape())
        throw ShapeError(std::string(op) + ": shape mismatch " +
                         shape_str(a.shape()) + " vs " + shape_str(b.shape()));
}

template <typename F, typename DF>
Tensor unary_elementwise(const char* name, const Tensor& x, F f, DF df) {
    auto xs = x.values();
    std::vector<double> out(xs.size());
    for (std::size_t i = 0; i < xs.size(); ++i) out[i] = f(xs[i]);
    Tensor y = Tensor::from_values(x.shape(), std::move(out));
    if (detail::op_needs_tape({&x})) {
        detail::record_op(name, {&x}, y, [xd = x.data(), yd = y.data(), df]() {
            for (std::size_t i = 0; i < xd->grad.size(); ++i)
                xd->grad[i] += yd->grad[i] * df(xd->values[i], yd->values[i]);
        });
    }
    return y;
}

template <typename F, typename DA, typename DB>
Tensor binary_elementwise(const char* name, const Tensor& a, const Tensor& b,
                          F f, DA dfa, DB dfb) {
    check_same_shape(name, a, b);
    auto as = a.values();
    auto bs = b.values();
    std::vector<double> out(as.size());
    for (std::size_t i = 0; i < as.size(); ++i) out[i] = f(as[i], bs[i]);
    Tensor y = Tensor::from_values(a.shape(), std::move(out));
    if (detail::op_needs_tape({&a, &b})) {
        detail::record_op(
            name, {&a, &b}, y,
            [ad = a.data(), bd = b.data(), yd = y.data(), dfa, dfb]() {
                if (!ad->grad.empty())
                    for (std::size_t i = 0; i < ad->grad.size(); ++i)
                        ad->grad[i] += yd->grad[i] * dfa(ad->values[i], bd->values[i]);
                if (!bd->grad.empty())
                    for (std::size_t i = 0; i < bd->grad.size(); ++i)
                        bd->grad[i] += yd->grad[i] * dfb(ad->values[i], bd->values[i]);
            });
    }
    return y;
}

}  // namespace

Tensor relu(const Tensor& x) {
    return unary_elementwise(
        "relu", x, [](double v) { return v > 0.0 ? v : 0.0; },
        [](double v, double) { return v > 0.0 ? 1.0 : 0.0; });
}

Tensor tanh(const Tensor& x) {
    return unary_elementwise(
        "tanh", x, [](double v) { return std::tanh(v); },
        [](double, double y) { return 1.0 - y * y; });
}

Tensor sigmoid(const Tensor& x) {
    return unary_elementwise(
        "sigmoid", x, [](double v) { return 1.0 / (1.0 + std::exp(-v)); },
        [](double, double y) { return y * (1.0 - y); });
}

Tensor exp(const Tensor& x) {
    return unary_elementwise(
        "exp", x, [](double v) { return std::exp(v); },
        [](double, double y) { return y; });
}

Tensor log(const Tensor& x) {
    for (double v : x.values())
        if (!(v > 0.0))
            throw ValueError("log: non-positive input " + std::to_string(v));
    return unary_elementwise(
        "log", x, [](double v) { return std::log(v); },
        [](double v, double) { return 1.0 / v; });
}

Tensor abs(const Tensor& x) {
    return unary_elementwise(
        "abs", x, [](double v) { return std::fabs(v); },
        [](double v, double) { return v > 0.0 ? 1.0 : (v < 0.0 ? -1.0 : 0.0); });
}

Tensor add(const Tensor& a, const Tensor& b) {
    return binary_elementwise(
        "add", a, b, [](double x, double y) { return x + y; },
        [](double, double) { return 1.0; }, [](double, double) { return 1.0; });
}

Tensor sub(const Tensor& a, const Tensor& b) {
    return binary_elementwise(
        "sub", a, b, [](double x, double y) { return x - y; },
        [](double, double) { return 1.0; }, [](double, double) { return -1.0; });
}

Tensor mul(const Tensor& a, const Tensor& b) {
    return binary_elementwise(
        "mul", a, b, [](double x, double y) { return x * y; },
        [](double, double y) { return y; }, [](double x, double) { return x; });
}

Tensor scale(const Tensor& x, double c) {
    return unary_elementwise(
        "scale", x, [c](double v) { return c * v; },
        [c](double, double) { return c; });
}

// --- matmul / transpose -----------------------------------------------------

Tensor matmul(const Tensor& a, const Tensor& b) {
    if (a.rank() != 2 || (b.rank() != 2 && b.rank() != 1))
        throw ShapeError("matmul: unsupported ranks " + shape_str(a.shape()) +
                         " · " + shape_str(b.shape()));
    const std::size_t m = a.shape()[0];
    const std::size_t k = a.shape()[1];
    const bool vec = b.rank() == 1;
    const std::size_t n = vec ? 1 : b.shape()[1];
    if ((vec ? b.shape()[0] : b.shape()[0]) != k)
        throw ShapeError("matmul: inner dimensions disagree " +
                         shape_str(a.shape()) + " · " + shape_str(b.shape()));

    auto av = a.values();
    auto bv = b.values();
    std::vector<double> out(m * n, 0.0);
    for (std::size_t i = 0; i < m; ++i)
        for (std::size_t p = 0; p < k; ++p) {
            const double aip = av[i * k + p];
            for (std::size_t j = 0; j < n; ++j)
                out[i * n + j] += aip * bv[p * n + j];
        }

    Tensor y = Tensor::from_values(vec ? Shape{m} : Shape{m, n}, std::move(out));
    if (detail::op_needs_tape({&a, &b})) {
        detail::record_op(
            "matmul", {&a, &b}, y,
            [ad = a.data(), bd = b.data(), yd = y.data(), m, k, n]() {
                const auto& g = yd->grad;
                if (!ad->grad.empty()) {
                    // dA += G · Bᵀ
                    for (std::size_t i = 0; i < m; ++i)
                        for (std::size_t p = 0; p < k; ++p) {
                            double acc = 0.0;
                            for (std::size_t j = 0; j < n; ++j)
                                acc += g[i * n + j] * bd->values[p * n + j];
                            ad->grad[i * k + p] += acc;
                        }
                }
                if (!bd->grad.empty()) {
                    // dB += Aᵀ · G
                    for (std::size_t p = 0; p < k; ++p)
                        for (std::size_t i = 0; i < m; ++i) {
                            const double aip = ad->values[i * k + p];
                            for (std::size_t j = 0; j < n; ++j)
                                bd->grad[p * n + j] += aip * g[i * n + j];
                        }
                }
            });
    }
    return y;
}

Tensor transpose(const Tensor& a) {
    if (a.rank() != 2)
        throw ShapeError("transpose: expected matrix, got " + shape_str(a.shape()));
    const std::size_t m = a.shape()[0], n = a.shape()[1];
    auto av = a.values();
    std::vector<double> out(m * n);
    for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = 0; j < n; ++j) out[j * m + i] = av[i * n + j];
    Tensor y = Tensor::from_values({n, m}, std::move(out));
    if (detail::op_needs_tape({&a})) {
        detail::record_op("transpose", {&a}, y, [ad = a.data(), yd = y.data(), m, n]() {
            for (std::size_t i = 0; i < m; ++i)
                for (std::size_t j = 0; j < n; ++j)
                    ad->grad[i * n + j] += yd->grad[j * m + i];
        });
    }
    return y;
}

Tensor add_rowwise(const Tensor& mat, const Tensor& rowv) {
    if (mat.rank() != 2 || rowv.rank() != 1 || rowv.shape()[0] != mat.cols())
        throw ShapeError("add_rowwise: shape mismatch " + shape_str(mat.shape()) +
                         " + " + shape_str(rowv.shape()));
    const std::size_t n = mat.rows(), d = mat.cols();
    auto mv = mat.values();
    auto rv = rowv.values();
    std::vector<double> out(n * d);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < d; ++j) out[i * d + j] = mv[i * d + j] + rv[j];
    Tensor y = Tensor::from_values(mat.shape(), std::move(out));
    if (detail::op_needs_tape({&mat, &rowv})) {
        detail::record_op(
            "add_rowwise", {&mat, &rowv}, y,
            [md = mat.data(), rd = rowv.data(), yd = y.data(), n, d]() {
                if (!md->grad.empty())
                    for (std::size_t i = 0; i < n * d; ++i) md->grad[i] += yd->grad[i];
                if (!rd->grad.empty())
                    for (std::size_t i = 0; i < n; ++i)
                        for (std::size_t j = 0; j < d; ++j)
                            rd->grad[j] += yd->grad[i * d + j];
            });
    }
    return y;
}

Tensor log_softmax_rows(const Tensor& x) {
    if (x.rank() != 2)
        throw ShapeError("log_softmax_rows: expected matrix, got " +
                         shape_str(x.shape()));
    for (double v : x.values())
        if (!std::isfinite(v))
            throw ValueError("log_softmax_rows: non-finite input");
    const std::size_t n = x.rows(), d = x.cols();
    auto xv = x.values();
    std::vector<double> out(n * d);
    for (std::size_t i = 0; i < n; ++i) {
        double mx = xv[i * d];
        for (std::size_t j = 1; j < d; ++j) mx = std::max(mx, xv[i * d + j]);
        double s = 0.0;
        for (std::size_t j = 0; j < d; ++j) s += std::exp(xv[i * d + j] - mx);
        const double lse = mx + std::log(s);
        for (std::size_t j = 0; j < d; ++j) out[i * d + j] = xv[i * d + j] - lse;
    }
    Tensor y = Tensor::from_values(x.shape(), std::move(out));
    if (detail::op_needs_tape({&x})) {
        // dx = g - softmax(x) * rowsum(g)
        detail::record_op("log_softmax_rows", {&x}, y,
                          [xd = x.data(), yd = y.data(), n, d]() {
                              for (std::size_t i = 0; i < n; ++i) {
                                  double gsum = 0.0;
                                  for (std::size_t j = 0; j < d; ++j)
                                      gsum += yd->grad[i * d + j];
                                  for (std::size_t j = 0; j < d; ++j) {
                                      const double p = std::exp(yd->values[i * d + j]);
                                      xd->grad[i * d + j] +=
                                          yd->grad[i * d + j] - p * gsum;
                                  }
                              }
                          });
    }
    return y;
}

Tensor sum(const Tensor& x) {
    double s = 0.0;
    for (double v : x.values()) s += v;
    Tensor y = Tensor::from_values({1}, {s});
    if (detail::op_needs_tape({&x})) {
        detail::record_op("sum", {&x}, y, [xd = x.data(), yd = y.data()]() {
            const double g = yd->grad[0];
            for (double& gi : xd->grad) gi += g;
        });
    }
    return y;
}

Tensor mean(const Tensor& x) {
    return scale(sum(x), 1.0 / static_cast<double>(x.size()));
}

Tensor concat_cols(std::span<const Tensor> parts) {
    if (parts.empty()) throw ContractError("concat_cols: no inputs");
    const std::size_t n = parts[0].rows();
    std::size_t total = 0;
    for (const Tensor& p : parts) {
        if (p.rank() != 2 || p.rows() != n)
            throw ShapeError("concat_cols: incompatible part " +
                             shape_str(p.shape()));
        total += p.cols();
    }
    std::vector<double> out(n * total);
    std::size_t off = 0;
    for (const Tensor& p : parts) {
        const std::size_t d = p.cols();
        auto pv = p.values();
        for (std::size_t i = 0; i < n; ++i)
            std::memcpy(&out[i * total + off], &pv[i * d], d * sizeof(double));
        off += d;
    }
    Tensor y = Tensor::from_values({n, total}, std::move(out));

    bool needs = Tape::active().recording();
    bool any = false;
    for (const Tensor& p : parts) any = any || p.requires_grad();
    if (needs && any) {
        std::vector<Tensor> ins(parts.begin(), parts.end());
        std::vector<const Tensor*> ptrs;
        for (const Tensor& t : ins) ptrs.push_back(&t);
        for (const Tensor& t : ins)
            if (t.requires_grad()) detail::ensure_grad(*t.data());
        detail::ensure_grad(*y.data());
        y.data()->requires_grad = true;
        auto pull = [ins, yd = y.data(), n, total]() {
            std::size_t off2 = 0;
            for (const Tensor& p : ins) {
                const std::size_t d = p.cols();
                auto pd = p.data();
                if (!pd->grad.empty())
                    for (std::size_t i = 0; i < n; ++i)
                        for (std::size_t j = 0; j < d; ++j)
                            pd->grad[i * d + j] += yd->grad[i * total + off2 + j];
                off2 += d;
            }
        };
        y.data()->node = Tape::active().record("concat_cols", ins, y, std::move(pull));
    }
    return y;
}

Tensor row(const Tensor& mat, std::size_t i) {
    if (mat.rank() != 2) throw ShapeError("row: expected matrix");
    if (i >= mat.rows()) throw ContractError("row: index out of range");
    const std::size_t d = mat.cols();
    auto mv = mat.values();
    std::vector<double> out(mv.begin() + static_cast<std::ptrdiff_t>(i * d),
                            mv.begin() + static_cast<std::ptrdiff_t>((i + 1) * d));
    Tensor y = Tensor::from_values({d}, std::move(out));
    if (detail::op_needs_tape({&mat})) {
        detail::record_op("row", {&mat}, y, [md = mat.data(), yd = y.data(), i, d]() {
            for (std::size_t j = 0; j < d; ++j) md->grad[i * d + j] += yd->grad[j];
        });
    }
    return y;
}

Tensor stack_rows(std::span<const Tensor> rows_in) {
    if (rows_in.empty()) throw ContractError("stack_rows: no inputs");
    const std::size_t d = rows_in[0].size();
    for (const Tensor& r : rows_in)
        if (r.rank() != 1 || r.size() != d)
            throw ShapeError("stack_rows: incompatible row " + shape_str(r.shape()));
    const std::size_t n = rows_in.size();
    std::vector<double> out(n * d);
    for (std::size_t i = 0; i < n; ++i)
        std::memcpy(&out[i * d], rows_in[i].values().data(), d * sizeof(double));
    Tensor y = Tensor::from_values({n, d}, std::move(out));

    bool any = false;
    for (const Tensor& r : rows_in) any = any || r.requires_grad();
    if (Tape::active().recording() && any) {
        std::vector<Tensor> ins(rows_in.begin(), rows_in.end());
        for (const Tensor& t : ins)
            if (t.requires_grad()) detail::ensure_grad(*t.data());
        detail::ensure_grad(*y.data());
        y.data()->requires_grad = true;
        auto pull = [ins, yd = y.data(), d]() {
            for (std::size_t i = 0; i < ins.size(); ++i) {
                auto rd = ins[i].data();
                if (rd->grad.empty()) continue;
                for (std::size_t j = 0; j < d; ++j)
                    rd->grad[j] += yd->grad[i * d + j];
            }
        };
        y.data()->node = Tape::active().record("stack_rows", ins, y, std::move(pull));
    }
    return y;
}

Tensor slice(const Tensor& vec, std::size_t start, std::size_t len) {
    if (vec.rank() != 1) throw ShapeError("slice: expected vector");
    if (start + len > vec.size() || len == 0)
        throw ContractError("slice: range [" + std::to_string(start) + ", " +
                            std::to_string(start + len) + ") out of bounds");
    auto v = vec.values();
    std::vector<double> out(v.begin() + static_cast<std::ptrdiff_t>(start),
                            v.begin() + static_cast<std::ptrdiff_t>(start + len));
    Tensor y = Tensor::from_values({len}, std::move(out));
    if (detail::op_needs_tape({&vec})) {
        detail::record_op("slice", {&vec}, y,
                          [vd = vec.data(), yd = y.data(), start, len]() {
                              for (std::size_t j = 0; j < len; ++j)
                                  vd->grad[start + j] += yd->grad[j];
                          });
    }
    return y;
}

Tensor dropout(const Tensor& x, double rate, Rng& rng) {
    if (rate < 0.0 || rate >= 1.0)
        throw ContractError("dropout: rate must be in [0, 1)");
    if (rate == 0.0) return x;
    const double keep = 1.0 - rate;
    std::vector<double> mask(x.size());
    for (double& m : mask) m = (rng.uniform() < rate) ? 0.0 : 1.0 / keep;
    auto xv = x.values();
    std::vector<double> out(x.size());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = xv[i] * mask[i];
    Tensor y = Tensor::from_values(x.shape(), std::move(out));
    if (detail::op_needs_tape({&x})) {
        detail::record_op("dropout", {&x}, y,
                          [xd = x.data(), yd = y.data(), mask = std::move(mask)]() {
                              for (std::size_t i = 0; i < xd->grad.size(); ++i)
                                  xd->grad[i] += yd->grad[i] * mask[i];
                          });
    }
    return y;
}

// --- gradient checking ------------------------------------------------------

GradCheckReport grad_check(const std::function<Tensor(const Tensor&)>& f,
                           Tensor x, double step, double tol) {
    if (step <= 0.0) throw ContractError("grad_check: step must be positive");
    Tape::active().clear();
    x.set_requires_grad(true);
    x.zero_grad();
    Tensor loss = f(x);
    if (loss.size() != 1)
        throw ContractError("grad_check: f must be scalar-valued");
    backward(loss);
    std::vector<double> analytic(x.grad().begin(), x.grad().end());

    GradCheckReport rep;
    {
        NoGradGuard ng;
        auto xv = x.values_mut();
        for (std::size_t i = 0; i < xv.size(); ++i) {
            const double saved = xv[i];
            xv[i] = saved + step;
            const double fp = f(x).item();
            xv[i] = saved - step;
            const double fm = f(x).item();
            xv[i] = saved;
            const double numeric = (fp - fm) / (2.0 * step);
            const double denom =
                std::max({std::fabs(analytic[i]), std::fabs(numeric), 1e-3});
            const double rel = std::fabs(analytic[i] - numeric) / denom;
            if (rel > rep.max_rel_err) {
                rep.max_rel_err = rel;
                rep.worst_index = i;
                rep.analytic = analytic[i];
                rep.numeric = numeric;
            }
        }
    }
    rep.pass = rep.max_rel_err <= tol;
    Tape::active().clear();
    return rep;
}

}  // namespace selfmi
