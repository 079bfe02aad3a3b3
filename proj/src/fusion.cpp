#include "selfmi/fusion.hpp"

#include <cmath>
#include <string>
#include <vector>

#include "selfmi/errors.hpp"

namespace selfmi {

const char* modality_name(Modality m) {
    switch (m) {
        case Modality::text: return "text";
        case Modality::audio: return "audio";
        case Modality::visual: return "visual";
    }
    throw ContractError("unknown modality tag " +
                        std::to_string(static_cast<int>(m)));
}

char modality_letter(Modality m) { return modality_name(m)[0]; }

Modality modality_from_name(std::string_view s) {
    for (Modality m : kModalities)
        if (s == modality_name(m)) return m;
    throw ConfigError("unknown modality '" + std::string(s) +
                      "' (expected text, audio, or visual)");
}

namespace {

Tensor affine_init(std::size_t rows, std::size_t cols, Rng& rng) {
    const double r = 1.0 / std::sqrt(static_cast<double>(rows));
    return Tensor::uniform({rows, cols}, -r, r, rng, true);
}

Tensor bias_init(std::size_t n, std::size_t fan_in, Rng& rng) {
    const double r = 1.0 / std::sqrt(static_cast<double>(fan_in));
    return Tensor::uniform({n}, -r, r, rng, true);
}

}  // namespace

FusionParams FusionParams::init(std::size_t concat_dim, std::size_t d_m,
                                Rng& rng) {
    if (concat_dim == 0 || d_m == 0)
        throw ContractError("fusion init: dimensions must be positive");
    FusionParams f;
    f.W_l1 = affine_init(concat_dim, d_m, rng);
    f.b_l1 = bias_init(d_m, concat_dim, rng);
    f.W_l2 = affine_init(d_m, 1, rng);
    f.b_l2 = bias_init(1, d_m, rng);
    return f;
}

UnimodalHeadParams UnimodalHeadParams::init(std::size_t d_in,
                                            std::size_t d_proj, Rng& rng) {
    if (d_in == 0 || d_proj == 0)
        throw ContractError("unimodal head init: dimensions must be positive");
    UnimodalHeadParams h;
    h.W_l1 = affine_init(d_in, d_proj, rng);
    // Z_s rows feed cosine normalization directly, and the heads see no
    // gradient until the contrastive terms switch on — an all-dead relu row
    // at init would abort that first pass. Leaning the bias positive makes
    // such rows astronomically unlikely instead of merely rare.
    const double r = 1.0 / std::sqrt(static_cast<double>(d_in));
    h.b_l1 = Tensor::uniform({d_proj}, 0.0, r, rng, true);
    h.W_l2 = affine_init(d_proj, 1, rng);
    h.b_l2 = bias_init(1, d_proj, rng);
    return h;
}

const Tensor& Representations::unimodal(Modality m) const {
    switch (m) {
        case Modality::text: return Z_t;
        case Modality::audio: return Z_a;
        case Modality::visual: return Z_v;
    }
    throw ContractError("unknown modality tag");
}

Tensor& Representations::unimodal(Modality m) {
    return const_cast<Tensor&>(
        static_cast<const Representations*>(this)->unimodal(m));
}

Tensor fuse(const FusionParams& f, const Tensor& x_t, const Tensor& x_a,
            const Tensor& x_v) {
    const std::size_t n = x_t.rows();
    if (x_a.rows() != n || x_v.rows() != n)
        throw ShapeError("fuse: batch sizes differ (" + std::to_string(n) +
                         ", " + std::to_string(x_a.rows()) + ", " +
                         std::to_string(x_v.rows()) + ")");
    std::vector<Tensor> parts{x_t, x_a, x_v};
    Tensor cat = concat_cols(parts);
    if (cat.cols() != f.W_l1.rows())
        throw ShapeError("fuse: concat dim " + std::to_string(cat.cols()) +
                         " != W rows " + std::to_string(f.W_l1.rows()));
    return relu(add_rowwise(matmul(cat, f.W_l1), f.b_l1));
}

Tensor predict(const Tensor& W2, const Tensor& b2, const Tensor& Z) {
    if (Z.rank() != 2 || W2.rank() != 2 || Z.cols() != W2.rows() ||
        W2.cols() != 1)
        throw ShapeError("predict: incompatible shapes " + shape_str(Z.shape()) +
                         " · " + shape_str(W2.shape()));
    return add_rowwise(matmul(Z, W2), b2);
}

std::pair<Tensor, Tensor> unimodal_forward(const UnimodalHeadParams& h,
                                           const Tensor& X_s, Modality s) {
    modality_name(s);  // validates the tag
    if (X_s.rank() != 2 || X_s.cols() != h.W_l1.rows())
        throw ShapeError(std::string("unimodal_forward(") + modality_name(s) +
                         "): input " + shape_str(X_s.shape()) +
                         " vs W_l1 " + shape_str(h.W_l1.shape()));
    Tensor Z_s = relu(add_rowwise(matmul(X_s, h.W_l1), h.b_l1));
    Tensor y = predict(h.W_l2, h.b_l2, Z_s);
    return {Z_s, y};
}

}  // namespace selfmi
