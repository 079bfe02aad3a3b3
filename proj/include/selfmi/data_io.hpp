#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "selfmi/modality.hpp"
#include "selfmi/tensor.hpp"

namespace selfmi {

// One multimodal sample: three feature sequences plus the scalar label.
struct ModalitySample {
    std::string id;
    Tensor text;    // [l_t × d_t]
    Tensor audio;   // [l_a × d_a]
    Tensor vision;  // [l_v × d_v]
    double label = 0.0;

    const Tensor& sequence(Modality m) const;
};

struct SeqDims {
    std::size_t l_t = 0, d_t = 0;
    std::size_t l_a = 0, d_a = 0;
    std::size_t l_v = 0, d_v = 0;

    std::size_t len(Modality m) const;
    std::size_t dim(Modality m) const;
};

struct DatasetSplits {
    std::vector<ModalitySample> train, valid, test;
    SeqDims dims;
    double lo = -3.0, hi = 3.0;

    // Disjoint ids, uniform dims, finite values, labels within [lo, hi],
    // at least one sample per split.
    void validate() const;
};

// Controls for the synthetic generator. A shared latent z with per-modality
// mixing makes cross-modal mutual information tunable via rho: 0 decouples
// the modalities, 1 gives them identical latent content.
struct SyntheticSpec {
    std::size_t n_samples = 0;
    SeqDims dims;
    std::size_t latent_dim = 4;
    double rho = 0.8;     // in [0, 1]
    double sigma = 0.3;   // label noise
    double lo = -3.0, hi = 3.0;
    std::uint64_t seed = 0;

    void validate() const;
};

// Draw z ~ N(0, I_k) per sample; per modality mix m_s = rho·z +
// sqrt(1−rho²)·eps_s, then every sequence row is A_s·m_s + b_s plus small
// temporal noise. label = clamp(wᵀz + sigma·nu, [lo, hi]). Contiguous
// 60/10/30 split. Same seed, same dataset, bit for bit.
DatasetSplits gen_synthetic(const SyntheticSpec& spec);

// Line-delimited text format. Header: `dims l_t d_t l_a d_a l_v d_v range
// lo hi`. Records: `id|split|label|text|audio|vision` with each sequence as
// semicolon-separated rows of comma-separated decimals. Doubles are written
// in shortest round-trip form, so save → load is bit-exact.
void save_features(const DatasetSplits& data, const std::string& path);
DatasetSplits load_features(const std::string& path);

// Seeded shuffle keyed by (seed, epoch), chunked; the final batch may be
// short. The batches partition 0..n-1 exactly.
std::vector<std::vector<std::size_t>> batches(std::size_t n,
                                              std::size_t batch_size,
                                              std::uint64_t seed,
                                              std::size_t epoch);

// Shortest decimal form that parses back to the identical f64.
std::string format_double(double v);
double parse_double(std::string_view text, const std::string& context);

}  // namespace selfmi
