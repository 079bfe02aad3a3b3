#include "selfmi/encoders.hpp"

#include <cmath>
#include <string>

#include "selfmi/errors.hpp"

namespace selfmi {

LstmParams LstmParams::init(std::size_t input_dim, std::size_t hidden_dim,
                            Rng& rng) {
    if (input_dim == 0 || hidden_dim == 0)
        throw ContractError("lstm init: dimensions must be positive");
    const double r = 1.0 / std::sqrt(static_cast<double>(hidden_dim));
    LstmParams p;
    p.hidden = hidden_dim;
    p.W_ih = Tensor::uniform({4 * hidden_dim, input_dim}, -r, r, rng, true);
    p.W_hh = Tensor::uniform({4 * hidden_dim, hidden_dim}, -r, r, rng, true);
    p.b = Tensor::uniform({4 * hidden_dim}, -r, r, rng, true);
    auto bv = p.b.values_mut();
    for (std::size_t i = hidden_dim; i < 2 * hidden_dim; ++i) bv[i] = 1.0;
    return p;
}

void LstmParams::check(std::size_t input_dim) const {
    const std::size_t h = hidden;
    if (h == 0) throw ContractError("lstm: uninitialized parameters");
    if (W_ih.shape() != Shape{4 * h, input_dim})
        throw ShapeError("lstm: W_ih is " + shape_str(W_ih.shape()) +
                         ", expected [" + std::to_string(4 * h) + "x" +
                         std::to_string(input_dim) + "]");
    if (W_hh.shape() != Shape{4 * h, h})
        throw ShapeError("lstm: W_hh is " + shape_str(W_hh.shape()));
    if (b.shape() != Shape{4 * h})
        throw ShapeError("lstm: b is " + shape_str(b.shape()));
}

std::pair<Tensor, Tensor> lstm_step(const LstmParams& p, const Tensor& x_t,
                                    const Tensor& h_prev,
                                    const Tensor& c_prev) {
    const std::size_t h = p.hidden;
    if (x_t.rank() != 1)
        throw ShapeError("lstm_step: input must be a vector, got " +
                         shape_str(x_t.shape()));
    p.check(x_t.shape()[0]);
    if (h_prev.shape() != Shape{h} || c_prev.shape() != Shape{h})
        throw ShapeError("lstm_step: state size mismatch");

    Tensor a = add(add(matmul(p.W_ih, x_t), matmul(p.W_hh, h_prev)), p.b);
    Tensor i = sigmoid(slice(a, 0, h));
    Tensor f = sigmoid(slice(a, h, h));
    Tensor g = tanh(slice(a, 2 * h, h));
    Tensor o = sigmoid(slice(a, 3 * h, h));
    Tensor c = add(mul(f, c_prev), mul(i, g));
    Tensor hidden = mul(o, tanh(c));
    return {hidden, c};
}

std::size_t ModalityEncoderConfig::output_dim() const {
    return kind == EncoderKind::first_position ? input_dim : hidden_dim;
}

void ModalityEncoderConfig::validate() const {
    if (input_dim == 0)
        throw ConfigError("encoder: input_dim must be positive");
    if (kind == EncoderKind::lstm_final_state && hidden_dim == 0)
        throw ConfigError("encoder: hidden_dim must be positive for lstm");
}

Tensor encode_sequence(const ModalityEncoderConfig& cfg,
                       const std::optional<LstmParams>& p, const Tensor& seq) {
    cfg.validate();
    if (seq.rank() != 2)
        throw ContractError("encode_sequence: expected [l x d] sequence, got " +
                            shape_str(seq.shape()));
    if (seq.cols() != cfg.input_dim)
        throw ShapeError("encode_sequence: feature dim " +
                         std::to_string(seq.cols()) + " != configured " +
                         std::to_string(cfg.input_dim));

    if (cfg.kind == EncoderKind::first_position) return row(seq, 0);

    if (!p)
        throw ContractError("encode_sequence: lstm encoder needs parameters");
    Tensor h = Tensor::zeros({cfg.hidden_dim});
    Tensor c = Tensor::zeros({cfg.hidden_dim});
    for (std::size_t t = 0; t < seq.rows(); ++t) {
        auto [h2, c2] = lstm_step(*p, row(seq, t), h, c);
        h = h2;
        c = c2;
    }
    return h;
}

}  // namespace selfmi
