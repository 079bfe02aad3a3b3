#pragma once

#include <cstddef>
#include <optional>
#include <utility>

#include "selfmi/rng.hpp"
#include "selfmi/tensor.hpp"

namespace selfmi {

// Single-direction LSTM cell parameters. Rows of W_ih/W_hh and entries of b
// are laid out in four h-sized gate slices, in order
// (input, forget, cell, output).
struct LstmParams {
    Tensor W_ih;            // [4h × d]
    Tensor W_hh;            // [4h × h]
    Tensor b;               // [4h]
    std::size_t hidden = 0;

    // Uniform init in [-1/sqrt(h), +1/sqrt(h)], then the forget-gate bias
    // slice is set to 1.0 so early training does not dump cell state.
    static LstmParams init(std::size_t input_dim, std::size_t hidden_dim,
                           Rng& rng);

    void check(std::size_t input_dim) const;
};

enum class EncoderKind { first_position, lstm_final_state };

struct ModalityEncoderConfig {
    EncoderKind kind = EncoderKind::lstm_final_state;
    std::size_t input_dim = 0;
    std::size_t hidden_dim = 0;  // ignored by first_position

    std::size_t output_dim() const;
    void validate() const;
};

// One cell update: i,f,o = sigmoid gates, g = tanh candidate,
// c = f ⊙ c_prev + i ⊙ g, h = o ⊙ tanh(c).
std::pair<Tensor, Tensor> lstm_step(const LstmParams& p, const Tensor& x_t,
                                    const Tensor& h_prev, const Tensor& c_prev);

// Collapse a [l × d] feature sequence to a fixed-length vector: either the
// hidden state after consuming all l steps from a zero initial state, or
// simply row 0 of the sequence (sentence-vector convention for text).
Tensor encode_sequence(const ModalityEncoderConfig& cfg,
                       const std::optional<LstmParams>& p, const Tensor& seq);

}  // namespace selfmi
