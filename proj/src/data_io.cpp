#include "selfmi/data_io.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>
#include <system_error>

#include "selfmi/errors.hpp"
#include "selfmi/rng.hpp"

namespace selfmi {

const Tensor& ModalitySample::sequence(Modality m) const {
    switch (m) {
        case Modality::text: return text;
        case Modality::audio: return audio;
        case Modality::visual: return vision;
    }
    throw ContractError("unknown modality tag");
}

std::size_t SeqDims::len(Modality m) const {
    switch (m) {
        case Modality::text: return l_t;
        case Modality::audio: return l_a;
        case Modality::visual: return l_v;
    }
    throw ContractError("unknown modality tag");
}

std::size_t SeqDims::dim(Modality m) const {
    switch (m) {
        case Modality::text: return d_t;
        case Modality::audio: return d_a;
        case Modality::visual: return d_v;
    }
    throw ContractError("unknown modality tag");
}

void DatasetSplits::validate() const {
    if (train.empty() || valid.empty() || test.empty())
        throw ParseError("dataset: every split needs at least one sample");
    if (!(lo < hi)) throw ParseError("dataset: empty sentiment range");
    std::set<std::string> ids;
    for (const auto* split : {&train, &valid, &test}) {
        for (const ModalitySample& s : *split) {
            if (!ids.insert(s.id).second)
                throw ParseError("dataset: duplicate sample id '" + s.id + "'");
            for (Modality m : kModalities) {
                const Tensor& seq = s.sequence(m);
                if (seq.shape() != Shape{dims.len(m), dims.dim(m)})
                    throw ParseError("dataset: sample '" + s.id + "' " +
                                     modality_name(m) + " is " +
                                     shape_str(seq.shape()) + ", expected [" +
                                     std::to_string(dims.len(m)) + "x" +
                                     std::to_string(dims.dim(m)) + "]");
                for (double v : seq.values())
                    if (!std::isfinite(v))
                        throw ParseError("dataset: sample '" + s.id +
                                         "' has a non-finite feature");
            }
            if (!std::isfinite(s.label) || s.label < lo || s.label > hi)
                throw ParseError("dataset: sample '" + s.id + "' label " +
                                 std::to_string(s.label) +
                                 " outside declared range");
        }
    }
}

void SyntheticSpec::validate() const {
    if (n_samples < 10)
        throw ConfigError("synthetic: need at least 10 samples to split");
    if (latent_dim < 1) throw ConfigError("synthetic: latent_dim must be >= 1");
    if (rho < 0.0 || rho > 1.0)
        throw ConfigError("synthetic: rho must lie in [0, 1]");
    if (sigma < 0.0) throw ConfigError("synthetic: sigma must be >= 0");
    if (!(lo < hi)) throw ConfigError("synthetic: range lo must be < hi");
    for (Modality m : kModalities)
        if (dims.len(m) == 0 || dims.dim(m) == 0)
            throw ConfigError(std::string("synthetic: ") + modality_name(m) +
                              " dims must be positive");
}

DatasetSplits gen_synthetic(const SyntheticSpec& spec) {
    spec.validate();
    Rng rng(spec.seed);
    const std::size_t k = spec.latent_dim;

    // Fixed label direction, scaled so clamping trims only far tails.
    std::vector<double> w(k);
    double wn = 0.0;
    for (double& x : w) {
        x = rng.normal();
        wn += x * x;
    }
    wn = std::sqrt(wn);
    const double target_norm = (spec.hi - spec.lo) / 5.0;
    for (double& x : w) x = x / wn * target_norm;

    // Per-modality affine maps, fixed across samples.
    std::array<std::vector<double>, 3> A;  // [d_s × k]
    std::array<std::vector<double>, 3> b;  // [d_s]
    for (Modality m : kModalities) {
        const std::size_t d = spec.dims.dim(m);
        auto& Am = A[static_cast<std::size_t>(m)];
        auto& bm = b[static_cast<std::size_t>(m)];
        Am.resize(d * k);
        bm.resize(d);
        for (double& x : Am) x = rng.normal() / std::sqrt(double(k));
        for (double& x : bm) x = rng.normal() * 0.5;
    }

    const double mix = std::sqrt(1.0 - spec.rho * spec.rho);
    const double temporal_noise = 0.05;

    DatasetSplits out;
    out.dims = spec.dims;
    out.lo = spec.lo;
    out.hi = spec.hi;

    const std::size_t n_train = spec.n_samples * 6 / 10;
    const std::size_t n_valid = spec.n_samples / 10;

    std::vector<double> z(k), ms(k);
    for (std::size_t i = 0; i < spec.n_samples; ++i) {
        for (double& x : z) x = rng.normal();

        ModalitySample s;
        {
            std::ostringstream id;
            id << "syn-";
            id.width(6);
            id.fill('0');
            id << i;
            s.id = id.str();
        }

        for (Modality m : kModalities) {
            const std::size_t mi = static_cast<std::size_t>(m);
            const std::size_t l = spec.dims.len(m), d = spec.dims.dim(m);
            for (std::size_t j = 0; j < k; ++j)
                ms[j] = spec.rho * z[j] + mix * rng.normal();
            std::vector<double> seq(l * d);
            for (std::size_t t = 0; t < l; ++t)
                for (std::size_t f = 0; f < d; ++f) {
                    double v = b[mi][f];
                    for (std::size_t j = 0; j < k; ++j)
                        v += A[mi][f * k + j] * ms[j];
                    seq[t * d + f] = v + temporal_noise * rng.normal();
                }
            Tensor seq_t = Tensor::from_values({l, d}, std::move(seq));
            switch (m) {
                case Modality::text: s.text = seq_t; break;
                case Modality::audio: s.audio = seq_t; break;
                case Modality::visual: s.vision = seq_t; break;
            }
        }

        double y = spec.sigma * rng.normal();
        for (std::size_t j = 0; j < k; ++j) y += w[j] * z[j];
        s.label = std::clamp(y, spec.lo, spec.hi);

        if (i < n_train)
            out.train.push_back(std::move(s));
        else if (i < n_train + n_valid)
            out.valid.push_back(std::move(s));
        else
            out.test.push_back(std::move(s));
    }
    out.validate();
    return out;
}

// --- text serialization -------------------------------------------------

std::string format_double(double v) {
    char buf[64];
    auto res = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, res.ptr);
}

double parse_double(std::string_view text, const std::string& context) {
    double v = 0.0;
    auto res = std::from_chars(text.data(), text.data() + text.size(), v);
    if (res.ec != std::errc() || res.ptr != text.data() + text.size())
        throw ParseError(context + ": bad number '" + std::string(text) + "'");
    return v;
}

namespace {

std::vector<std::string_view> split_on(std::string_view s, char sep) {
    std::vector<std::string_view> parts;
    std::size_t start = 0;
    while (true) {
        const std::size_t pos = s.find(sep, start);
        if (pos == std::string_view::npos) {
            parts.push_back(s.substr(start));
            return parts;
        }
        parts.push_back(s.substr(start, pos - start));
        start = pos + 1;
    }
}

void write_sequence(std::ostream& os, const Tensor& seq) {
    const std::size_t l = seq.rows(), d = seq.cols();
    for (std::size_t t = 0; t < l; ++t) {
        if (t) os << ';';
        for (std::size_t f = 0; f < d; ++f) {
            if (f) os << ',';
            os << format_double(seq.at(t, f));
        }
    }
}

Tensor parse_sequence(std::string_view text, std::size_t l, std::size_t d,
                      const std::string& where) {
    std::vector<double> vals;
    vals.reserve(l * d);
    auto rows_v = split_on(text, ';');
    if (rows_v.size() != l)
        throw ParseError(where + ": " + std::to_string(rows_v.size()) +
                         " rows, expected " + std::to_string(l));
    for (std::size_t t = 0; t < rows_v.size(); ++t) {
        auto cells = split_on(rows_v[t], ',');
        if (cells.size() != d)
            throw ParseError(where + " row " + std::to_string(t) + ": " +
                             std::to_string(cells.size()) +
                             " entries, expected " + std::to_string(d));
        for (auto c : cells) vals.push_back(parse_double(c, where));
    }
    return Tensor::from_values({l, d}, std::move(vals));
}

}  // namespace

void save_features(const DatasetSplits& data, const std::string& path) {
    data.validate();
    std::ofstream os(path);
    if (!os) throw IoError("cannot open '" + path + "' for writing");
    os << "dims " << data.dims.l_t << ' ' << data.dims.d_t << ' '
       << data.dims.l_a << ' ' << data.dims.d_a << ' ' << data.dims.l_v << ' '
       << data.dims.d_v << " range " << format_double(data.lo) << ' '
       << format_double(data.hi) << '\n';
    const std::array<std::pair<const std::vector<ModalitySample>*, const char*>,
                     3>
        splits{{{&data.train, "train"}, {&data.valid, "valid"},
                {&data.test, "test"}}};
    for (auto [samples, name] : splits) {
        for (const ModalitySample& s : *samples) {
            if (s.id.find_first_of("|;,\n") != std::string::npos)
                throw IoError("sample id '" + s.id +
                              "' contains a format delimiter");
            os << s.id << '|' << name << '|' << format_double(s.label) << '|';
            write_sequence(os, s.text);
            os << '|';
            write_sequence(os, s.audio);
            os << '|';
            write_sequence(os, s.vision);
            os << '\n';
        }
    }
    if (!os) throw IoError("write to '" + path + "' failed");
}

DatasetSplits load_features(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw IoError("cannot open '" + path + "'");

    std::string line;
    if (!std::getline(is, line))
        throw ParseError(path + ":1: missing header line");
    auto tokens = split_on(line, ' ');
    if (tokens.size() != 10 || tokens[0] != "dims" || tokens[7] != "range")
        throw ParseError(path +
                         ":1: expected 'dims l_t d_t l_a d_a l_v d_v range lo hi'");
    auto parse_size = [&](std::string_view t) {
        std::size_t v = 0;
        auto res = std::from_chars(t.data(), t.data() + t.size(), v);
        if (res.ec != std::errc() || res.ptr != t.data() + t.size() || v == 0)
            throw ParseError(path + ":1: bad dimension '" + std::string(t) + "'");
        return v;
    };
    DatasetSplits out;
    out.dims.l_t = parse_size(tokens[1]);
    out.dims.d_t = parse_size(tokens[2]);
    out.dims.l_a = parse_size(tokens[3]);
    out.dims.d_a = parse_size(tokens[4]);
    out.dims.l_v = parse_size(tokens[5]);
    out.dims.d_v = parse_size(tokens[6]);
    out.lo = parse_double(tokens[8], path + ":1 range lo");
    out.hi = parse_double(tokens[9], path + ":1 range hi");

    std::size_t lineno = 1;
    while (std::getline(is, line)) {
        ++lineno;
        if (line.empty()) continue;
        const std::string where = path + ":" + std::to_string(lineno);
        auto fields = split_on(line, '|');
        if (fields.size() != 6)
            throw ParseError(where + ": " + std::to_string(fields.size()) +
                             " fields, expected 6 (id|split|label|text|audio|vision)");
        ModalitySample s;
        s.id = std::string(fields[0]);
        if (s.id.empty()) throw ParseError(where + ": empty sample id");
        s.label = parse_double(fields[2], where + " label");
        s.text = parse_sequence(fields[3], out.dims.l_t, out.dims.d_t,
                                where + " sample '" + s.id + "' text");
        s.audio = parse_sequence(fields[4], out.dims.l_a, out.dims.d_a,
                                 where + " sample '" + s.id + "' audio");
        s.vision = parse_sequence(fields[5], out.dims.l_v, out.dims.d_v,
                                  where + " sample '" + s.id + "' vision");
        if (fields[1] == "train")
            out.train.push_back(std::move(s));
        else if (fields[1] == "valid")
            out.valid.push_back(std::move(s));
        else if (fields[1] == "test")
            out.test.push_back(std::move(s));
        else
            throw ParseError(where + ": unknown split '" +
                             std::string(fields[1]) + "'");
    }
    out.validate();
    return out;
}

std::vector<std::vector<std::size_t>> batches(std::size_t n,
                                              std::size_t batch_size,
                                              std::uint64_t seed,
                                              std::size_t epoch) {
    if (batch_size < 1) throw ContractError("batches: batch_size must be >= 1");
    if (n == 0) throw ContractError("batches: empty split");
    std::vector<std::size_t> order(n);
    for (std::size_t i = 0; i < n; ++i) order[i] = i;
    Rng rng(Rng::mix(seed, epoch));
    for (std::size_t i = n - 1; i > 0; --i)
        std::swap(order[i], order[rng.bounded(i + 1)]);

    std::vector<std::vector<std::size_t>> out;
    for (std::size_t start = 0; start < n; start += batch_size) {
        const std::size_t end = std::min(n, start + batch_size);
        out.emplace_back(order.begin() + static_cast<std::ptrdiff_t>(start),
                         order.begin() + static_cast<std::ptrdiff_t>(end));
    }
    return out;
}

}  // namespace selfmi
