#include "selfmi/gradcheck_suite.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <functional>

#include "selfmi/data_io.hpp"
#include "selfmi/encoders.hpp"
#include "selfmi/errors.hpp"
#include "selfmi/mi_cpc.hpp"
#include "selfmi/model.hpp"
#include "selfmi/training.hpp"
#include "selfmi/ulg_mi.hpp"

namespace selfmi {

namespace {

// Shifts uniform draws away from 0 so |x| ≥ margin: keeps the FD probes of
// kinked ops (relu, abs) off their corners.
Tensor away_from_zero(Shape shape, double margin, Rng& rng) {
    Tensor t = Tensor::uniform(shape, margin, 1.0, rng);
    auto v = t.values_mut();
    for (double& x : v)
        if (rng.bounded(2)) x = -x;
    return t;
}

struct Suite {
    std::uint64_t seed;
    std::ostream& out;
    GradCheckSummary summary;
    std::uint64_t stream = 0;

    Rng fresh_rng() { return Rng(Rng::mix(seed, ++stream)); }

    // Reduce op output to a scalar against fixed random weights so every
    // output coordinate carries a distinct upstream gradient.
    void check(const std::string& name, Tensor x,
               const std::function<Tensor(const Tensor&)>& f) {
        GradCheckCase c;
        c.name = name;
        try {
            GradCheckReport rep = grad_check(f, std::move(x), 1e-5, 1e-4);
            c.pass = rep.pass;
            c.max_rel_err = rep.max_rel_err;
            c.worst_index = rep.worst_index;
            c.analytic = rep.analytic;
            c.numeric = rep.numeric;
        } catch (const std::exception& e) {
            c.pass = false;
            c.name += std::string(" (threw: ") + e.what() + ")";
        }
        if (c.pass) {
            out << "PASS " << c.name << " max_rel_err=" << c.max_rel_err
                << "\n";
        } else {
            out << "FAIL " << c.name << " coord=" << c.worst_index
                << " analytic=" << c.analytic << " numeric=" << c.numeric
                << " rel_err=" << c.max_rel_err << "\n";
            summary.all_pass = false;
        }
        summary.cases.push_back(std::move(c));
    }

    Tensor weigh(const Tensor& y, Rng& rng) {
        Tensor w = Tensor::uniform(y.shape(), -1.0, 1.0, rng);
        return sum(mul(w, y));
    }
};

void elementwise_cases(Suite& s) {
    {
        Rng rng = s.fresh_rng();
        Tensor x = Tensor::uniform({3, 4}, -1.0, 1.0, rng);
        Tensor b = Tensor::uniform({3, 4}, -1.0, 1.0, rng);
        Rng wrng = s.fresh_rng();
        s.check("op add (lhs)", x,
                [&](const Tensor& t) { Rng r = wrng; return s.weigh(add(t, b), r); });
        s.check("op add (rhs)", b,
                [&](const Tensor& t) { Rng r = wrng; return s.weigh(add(x, t), r); });
        s.check("op sub (lhs)", x,
                [&](const Tensor& t) { Rng r = wrng; return s.weigh(sub(t, b), r); });
        s.check("op sub (rhs)", b,
                [&](const Tensor& t) { Rng r = wrng; return s.weigh(sub(x, t), r); });
        s.check("op mul (lhs)", x,
                [&](const Tensor& t) { Rng r = wrng; return s.weigh(mul(t, b), r); });
        s.check("op mul (rhs)", b,
                [&](const Tensor& t) { Rng r = wrng; return s.weigh(mul(x, t), r); });
        s.check("op scale", x, [&](const Tensor& t) {
            Rng r = wrng;
            return s.weigh(scale(t, -1.7), r);
        });
    }
    struct Unary {
        const char* name;
        Tensor (*fn)(const Tensor&);
        bool kinked;
        bool positive;
    };
    const Unary unary[] = {
        {"op relu", relu, true, false},   {"op tanh", tanh, false, false},
        {"op sigmoid", sigmoid, false, false}, {"op exp", exp, false, false},
        {"op log", log, false, true},     {"op abs", abs, true, false},
    };
    for (const Unary& u : unary) {
        Rng rng = s.fresh_rng();
        Tensor x = u.positive ? Tensor::uniform({3, 4}, 0.2, 2.0, rng)
                  : u.kinked  ? away_from_zero({3, 4}, 0.05, rng)
                              : Tensor::uniform({3, 4}, -1.5, 1.5, rng);
        Rng wrng = s.fresh_rng();
        s.check(u.name, x, [&, fn = u.fn](const Tensor& t) {
            Rng r = wrng;
            return s.weigh(fn(t), r);
        });
    }
}

void structural_cases(Suite& s) {
    {
        Rng rng = s.fresh_rng();
        Tensor a = Tensor::uniform({3, 4}, -1.0, 1.0, rng);
        Tensor b = Tensor::uniform({4, 2}, -1.0, 1.0, rng);
        Rng wrng = s.fresh_rng();
        s.check("op matmul (lhs)", a, [&](const Tensor& t) {
            Rng r = wrng;
            return s.weigh(matmul(t, b), r);
        });
        s.check("op matmul (rhs)", b, [&](const Tensor& t) {
            Rng r = wrng;
            return s.weigh(matmul(a, t), r);
        });
        Tensor v = Tensor::uniform({4}, -1.0, 1.0, rng);
        s.check("op matmul mat-vec (lhs)", a, [&](const Tensor& t) {
            Rng r = wrng;
            return s.weigh(matmul(t, v), r);
        });
        s.check("op matmul mat-vec (rhs)", v, [&](const Tensor& t) {
            Rng r = wrng;
            return s.weigh(matmul(a, t), r);
        });
        s.check("op transpose", a, [&](const Tensor& t) {
            Rng r = wrng;
            return s.weigh(transpose(t), r);
        });
    }
    {
        Rng rng = s.fresh_rng();
        Tensor m = Tensor::uniform({4, 3}, -1.0, 1.0, rng);
        Tensor bias = Tensor::uniform({3}, -1.0, 1.0, rng);
        Rng wrng = s.fresh_rng();
        s.check("op add_rowwise (mat)", m, [&](const Tensor& t) {
            Rng r = wrng;
            return s.weigh(add_rowwise(t, bias), r);
        });
        s.check("op add_rowwise (bias)", bias, [&](const Tensor& t) {
            Rng r = wrng;
            return s.weigh(add_rowwise(m, t), r);
        });
        s.check("op log_softmax_rows", m, [&](const Tensor& t) {
            Rng r = wrng;
            return s.weigh(log_softmax_rows(t), r);
        });
        s.check("op sum", m, [&](const Tensor& t) { return sum(t); });
        s.check("op mean", m, [&](const Tensor& t) { return mean(t); });
        s.check("op row", m, [&](const Tensor& t) {
            Rng r = wrng;
            return s.weigh(row(t, 2), r);
        });
    }
    {
        Rng rng = s.fresh_rng();
        Tensor p0 = Tensor::uniform({3, 2}, -1.0, 1.0, rng);
        Tensor p1 = Tensor::uniform({3, 3}, -1.0, 1.0, rng);
        Tensor p2 = Tensor::uniform({3, 2}, -1.0, 1.0, rng);
        Rng wrng = s.fresh_rng();
        s.check("op concat_cols", p1, [&](const Tensor& t) {
            Rng r = wrng;
            std::array<Tensor, 3> parts{p0, t, p2};
            return s.weigh(concat_cols(parts), r);
        });
        Tensor r0 = Tensor::uniform({4}, -1.0, 1.0, rng);
        Tensor r1 = Tensor::uniform({4}, -1.0, 1.0, rng);
        s.check("op stack_rows", r1, [&](const Tensor& t) {
            Rng r = wrng;
            std::array<Tensor, 2> rows{r0, t};
            return s.weigh(stack_rows(rows), r);
        });
        Tensor vec = Tensor::uniform({6}, -1.0, 1.0, rng);
        s.check("op slice", vec, [&](const Tensor& t) {
            Rng r = wrng;
            return s.weigh(slice(t, 1, 3), r);
        });
    }
    {
        Rng rng = s.fresh_rng();
        Tensor x = Tensor::uniform({4, 5}, -1.0, 1.0, rng);
        Rng wrng = s.fresh_rng();
        const std::uint64_t mask_seed = Rng::mix(s.seed, 0xd00d);
        s.check("op dropout", x, [&](const Tensor& t) {
            // identical mask on every probe: the closure re-seeds
            Rng mask_rng(mask_seed);
            Rng r = wrng;
            return s.weigh(dropout(t, 0.35, mask_rng), r);
        });
    }
    {
        Rng rng = s.fresh_rng();
        Tensor x = Tensor::uniform({4, 6}, 0.2, 1.0, rng);
        Rng wrng = s.fresh_rng();
        s.check("op unit_normalize_rows", x, [&](const Tensor& t) {
            Rng r = wrng;
            return s.weigh(unit_normalize_rows(t), r);
        });
    }
}

void composite_cases(Suite& s) {
    {
        Rng rng = s.fresh_rng();
        LstmParams p = LstmParams::init(3, 4, rng);
        Tensor x = Tensor::uniform({3}, -1.0, 1.0, rng);
        Tensor h = Tensor::uniform({4}, -0.5, 0.5, rng);
        Tensor c = Tensor::uniform({4}, -0.5, 0.5, rng);
        Rng wrng = s.fresh_rng();
        auto step_loss = [&](Rng& r) {
            auto [h1, c1] = lstm_step(p, x, h, c);
            return add(s.weigh(h1, r), s.weigh(c1, r));
        };
        s.check("composite lstm_step (x)", x, [&](const Tensor&) {
            Rng r = wrng;
            return step_loss(r);
        });
        s.check("composite lstm_step (W_ih)", p.W_ih, [&](const Tensor&) {
            Rng r = wrng;
            return step_loss(r);
        });
        s.check("composite lstm_step (W_hh)", p.W_hh, [&](const Tensor&) {
            Rng r = wrng;
            return step_loss(r);
        });
        s.check("composite lstm_step (b)", p.b, [&](const Tensor&) {
            Rng r = wrng;
            return step_loss(r);
        });
    }
    {
        Rng rng = s.fresh_rng();
        ModalityEncoderConfig cfg{EncoderKind::lstm_final_state, 3, 4};
        LstmParams p = LstmParams::init(3, 4, rng);
        std::optional<LstmParams> opt_p(p);
        Tensor seq = Tensor::uniform({5, 3}, -1.0, 1.0, rng);
        Rng wrng = s.fresh_rng();
        s.check("composite encode_sequence (seq)", seq, [&](const Tensor& t) {
            Rng r = wrng;
            return s.weigh(encode_sequence(cfg, opt_p, t), r);
        });
        s.check("composite encode_sequence (W_hh)", p.W_hh,
                [&](const Tensor&) {
            Rng r = wrng;
            return s.weigh(encode_sequence(cfg, opt_p, seq), r);
        });
    }
    {
        Rng rng = s.fresh_rng();
        FusionParams fp = FusionParams::init(9, 6, rng);
        Tensor xt = Tensor::uniform({4, 3}, -1.0, 1.0, rng);
        Tensor xa = Tensor::uniform({4, 3}, -1.0, 1.0, rng);
        Tensor xv = Tensor::uniform({4, 3}, -1.0, 1.0, rng);
        Rng wrng = s.fresh_rng();
        auto fuse_loss = [&](Rng& r) {
            Tensor Z = fuse(fp, xt, xa, xv);
            return add(s.weigh(Z, r),
                       s.weigh(predict(fp.W_l2, fp.b_l2, Z), r));
        };
        s.check("composite fuse+predict (W_l1)", fp.W_l1, [&](const Tensor&) {
            Rng r = wrng;
            return fuse_loss(r);
        });
        s.check("composite fuse+predict (x_a)", xa, [&](const Tensor&) {
            Rng r = wrng;
            return fuse_loss(r);
        });
    }
    {
        Rng rng = s.fresh_rng();
        UnimodalHeadParams hp = UnimodalHeadParams::init(5, 6, rng);
        Tensor x = Tensor::uniform({4, 5}, -1.0, 1.0, rng);
        Rng wrng = s.fresh_rng();
        s.check("composite unimodal_forward (W_l1)", hp.W_l1,
                [&](const Tensor&) {
            Rng r = wrng;
            auto [Z, y] = unimodal_forward(hp, x, Modality::audio);
            return add(s.weigh(Z, r), s.weigh(y, r));
        });
    }
    {
        Rng rng = s.fresh_rng();
        CpcCritic critic = CpcCritic::init(6, 6, 5, rng);
        Tensor Zm = Tensor::uniform({4, 6}, 0.2, 1.0, rng);
        Tensor Zs = Tensor::uniform({4, 5}, 0.2, 1.0, rng);
        auto pair_loss = [&] {
            return infonce_loss(cpc_scores(critic, Zm, Zs, Modality::audio));
        };
        s.check("composite infonce (critic W1)", critic.W1,
                [&](const Tensor&) { return pair_loss(); });
        s.check("composite infonce (Z_m)", Zm,
                [&](const Tensor&) { return pair_loss(); });
        s.check("composite infonce (Z_s)", Zs,
                [&](const Tensor&) { return pair_loss(); });
    }
}

// The entire batch objective — every term live — against finite differences,
// one parameter tensor at a time.
void objective_cases(Suite& s) {
    SyntheticSpec spec;
    spec.n_samples = 12;
    spec.dims = {2, 3, 2, 3, 2, 3};
    spec.latent_dim = 3;
    spec.rho = 0.9;
    spec.seed = Rng::mix(s.seed, 0xabcd);

    DatasetSplits data = gen_synthetic(spec);
    ModelConfig mc;
    mc.encoders[0] = {EncoderKind::first_position, 3, 0};
    mc.encoders[1] = {EncoderKind::lstm_final_state, 3, 3};
    mc.encoders[2] = {EncoderKind::lstm_final_state, 3, 3};
    mc.d_m = 16;
    mc.unimodal_proj = 16;
    SelfMiModel model = SelfMiModel::init(mc, Rng::mix(s.seed, 0xbeef));

    const std::array<bool, 3> all{true, true, true};
    std::vector<std::size_t> batch{0, 1, 2, 3};
    std::vector<double> ym(batch.size());
    for (std::size_t i = 0; i < batch.size(); ++i)
        ym[i] = data.train[batch[i]].label;
    Tensor y_m = Tensor::from_values({batch.size(), 1}, std::move(ym));

    std::array<std::vector<double>, 3> targets;
    for (std::size_t k = 0; k < 3; ++k) {
        targets[k].resize(batch.size());
        for (std::size_t i = 0; i < batch.size(); ++i) {
            const double v =
                y_m.at(i, 0) + 0.4 * double(k + 1) * (i % 2 ? 1.0 : -1.0);
            targets[k][i] = std::clamp(v, data.lo, data.hi);
        }
    }

    Rng unused(0);
    auto objective = [&] {
        auto fwd = model.forward(data.train, batch, false, unused);
        CpcOutputs cpc = cpc_total(model.critics, fwd.reps, all);
        auto gen_out =
            generator_outputs(model.gens, model.critics, fwd.reps, all);
        Tensor task = label_task_loss(gen_out, y_m, all);
        return total_loss(fwd.y_m_hat, y_m, fwd.y_s_hat, targets, &cpc, 0.1,
                          task, all)
            .total;
    };
    for (const auto& [name, param] : model.named_params())
        s.check("objective " + name, param,
                [&](const Tensor&) { return objective(); });
}

}  // namespace

GradCheckSummary run_gradcheck_suite(std::uint64_t seed, std::ostream& out,
                                     const std::string& corrupt_op,
                                     double corrupt_eps) {
    struct FaultGuard {
        ~FaultGuard() { testing::set_backward_fault("", 0.0); }
    } guard;
    testing::set_backward_fault(corrupt_op, corrupt_eps);

    Suite s{seed, out, {}, 0};
    elementwise_cases(s);
    structural_cases(s);
    composite_cases(s);
    objective_cases(s);
    out << (s.summary.all_pass ? "ALL PASS" : "FAILURES PRESENT") << " ("
        << s.summary.cases.size() << " checks)\n";
    return std::move(s.summary);
}

}  // namespace selfmi
