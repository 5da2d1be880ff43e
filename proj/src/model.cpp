#include "blindsr/model.hpp"

#include <cmath>
#include <fstream>
#include <numbers>
#include <set>
#include <sstream>

#include <json.hpp>

#include "blindsr/rng.hpp"

namespace blindsr::model {

using json = nlohmann::json;

void Dims::validate() const
{
    if (K < 1 || r < 1 || s < 1 || n < 1) {
        throw ValidationError("dims: K, r, s, n must all be >= 1");
    }
    if (n < 2 * r) {
        throw ValidationError("dims: need n >= 2r (n=" + std::to_string(n) +
                              ", r=" + std::to_string(r) + ")");
    }
}

std::string to_string(InstanceMode mode)
{
    switch (mode) {
    case InstanceMode::random: return "random";
    case InstanceMode::separated: return "separated";
    case InstanceMode::conditioned: return "conditioned";
    }
    return "?";
}

InstanceMode parse_instance_mode(const std::string& text)
{
    if (text == "random") return InstanceMode::random;
    if (text == "separated") return InstanceMode::separated;
    if (text == "conditioned") return InstanceMode::conditioned;
    throw ValidationError("unknown instance mode '" + text + "'");
}

void InstanceRecipe::validate() const
{
    if ((mode == InstanceMode::conditioned) != kappa.has_value()) {
        throw ValidationError("recipe: kappa is required for, and only for, conditioned mode");
    }
    if (kappa && !(*kappa >= 1.0 && std::isfinite(*kappa))) {
        throw ValidationError("recipe: kappa must be a finite value >= 1");
    }
}

CVector GroundTruth::product(Index k, Index p) const
{
    return amps(k, p) * coeffs.at(k).at(p);
}

CVector steering_vector(double tau, Index n)
{
    if (!(tau >= 0.0 && tau < 1.0)) {
        throw DomainError("steering_vector: tau must lie in [0, 1)");
    }
    if (n < 1) {
        throw DimensionError("steering_vector: n must be >= 1");
    }
    CVector a(n);
    for (Index j = 0; j < n; ++j) {
        // Reduce the phase before the trig call so large j*tau stays accurate.
        const double turns = std::fmod(static_cast<double>(j) * tau, 1.0);
        const double ang   = -2.0 * std::numbers::pi * turns;
        a[j]               = Complex(std::cos(ang), std::sin(ang));
    }
    return a;
}

double wrap_distance(double a, double b)
{
    double d = std::fabs(a - b);
    d        = d - std::floor(d);
    return std::min(d, 1.0 - d);
}

namespace {

std::vector<double> draw_separated(Rng& rng, Index count, Index n, std::vector<double>& placed)
{
    const double gap = 1.0 / static_cast<double>(n);
    std::vector<double> out;
    for (Index p = 0; p < count; ++p) {
        bool ok = false;
        for (int attempt = 0; attempt < kSeparationAttempts && !ok; ++attempt) {
            const double t = rng.uniform();
            ok             = true;
            for (double q : placed) {
                if (wrap_distance(t, q) < gap) {
                    ok = false;
                    break;
                }
            }
            if (ok) {
                placed.push_back(t);
                out.push_back(t);
            }
        }
        if (!ok) {
            throw InfeasibleSeparationError("separated mode: could not place spike " +
                                            std::to_string(placed.size() + 1) + " with gap 1/" +
                                            std::to_string(n) + " after " +
                                            std::to_string(kSeparationAttempts) + " draws");
        }
    }
    return out;
}

std::vector<double> draw_grid(Rng& rng, Index count, Index n)
{
    // Partial Fisher-Yates over {1, ..., n}; j/n is taken mod 1 so j = n maps to 0.
    std::vector<Index> pool(n);
    for (Index j = 0; j < n; ++j) {
        pool[j] = j + 1;
    }
    std::vector<double> out;
    for (Index p = 0; p < count; ++p) {
        const auto pick = p + static_cast<Index>(rng.uniform_index(n - p));
        std::swap(pool[p], pool[pick]);
        out.push_back(pool[p] == n ? 0.0 : static_cast<double>(pool[p]) / static_cast<double>(n));
    }
    return out;
}

}  // namespace

GroundTruth generate_instance(const InstanceRecipe& recipe, const Dims& dims, std::uint64_t seed)
{
    recipe.validate();
    dims.validate();
    if (recipe.mode == InstanceMode::separated && dims.K * dims.r > dims.n) {
        throw InfeasibleSeparationError("separated mode: " + std::to_string(dims.K * dims.r) +
                                        " spikes cannot keep gap 1/" + std::to_string(dims.n));
    }

    Rng         rng(seed);
    GroundTruth gt;
    gt.dims = dims;
    gt.taus.resize(dims.K, dims.r);
    gt.amps.resize(dims.K, dims.r);
    gt.coeffs.assign(dims.K, std::vector<CVector>(dims.r));

    std::vector<double> placed;
    for (Index k = 0; k < dims.K; ++k) {
        std::vector<double> taus;
        switch (recipe.mode) {
        case InstanceMode::random:
            for (Index p = 0; p < dims.r; ++p) taus.push_back(rng.uniform());
            break;
        case InstanceMode::separated:
            taus = draw_separated(rng, dims.r, dims.n, placed);
            break;
        case InstanceMode::conditioned:
            if (recipe.grid_locked) {
                taus = draw_grid(rng, dims.r, dims.n);
            } else {
                for (Index p = 0; p < dims.r; ++p) taus.push_back(rng.uniform());
            }
            break;
        }
        for (Index p = 0; p < dims.r; ++p) {
            gt.taus(k, p) = taus[p];
        }

        for (Index p = 0; p < dims.r; ++p) {
            double magnitude = 0.0;
            if (recipe.mode == InstanceMode::conditioned) {
                const double frac = dims.r == 1 ? 0.0 : static_cast<double>(p) / (dims.r - 1);
                magnitude         = 1.0 + (1.0 / *recipe.kappa - 1.0) * frac;
            } else {
                magnitude = 1.0 + std::pow(10.0, rng.uniform());
            }
            const double phase = rng.uniform(0.0, 2.0 * std::numbers::pi);
            gt.amps(k, p)      = std::polar(magnitude, -phase);
        }

        for (Index p = 0; p < dims.r; ++p) {
            CVector h(dims.s);
            for (Index u = 0; u < dims.s; ++u) {
                h[u] = rng.complex_normal();
            }
            gt.coeffs[k][p] = h / h.norm();
        }
    }

    const double half_width = std::sqrt(3.0);
    for (Index k = 0; k < dims.K; ++k) {
        CMatrix b(dims.n, dims.s);
        for (Index j = 0; j < dims.n; ++j) {
            for (Index u = 0; u < dims.s; ++u) {
                b(j, u) = rng.uniform(-half_width, half_width);
            }
        }
        gt.bases.push_back(std::move(b));
    }
    return gt;
}

CMatrix build_data_matrix(const GroundTruth& gt, Index k)
{
    if (k < 0 || k >= gt.dims.K) {
        throw DimensionError("build_data_matrix: signal index out of range");
    }
    CMatrix x = CMatrix::Zero(gt.dims.s, gt.dims.n);
    for (Index p = 0; p < gt.dims.r; ++p) {
        x.noalias() += gt.product(k, p) * steering_vector(gt.taus(k, p), gt.dims.n).transpose();
    }
    return x;
}

std::vector<CMatrix> build_data_matrices(const GroundTruth& gt)
{
    std::vector<CMatrix> out;
    for (Index k = 0; k < gt.dims.K; ++k) {
        out.push_back(build_data_matrix(gt, k));
    }
    return out;
}

CVector sense(const CMatrix& basis, const CMatrix& x)
{
    if (basis.cols() != x.rows() || basis.rows() != x.cols()) {
        throw DimensionError("sense: basis is " + std::to_string(basis.rows()) + "x" +
                             std::to_string(basis.cols()) + " but X is " +
                             std::to_string(x.rows()) + "x" + std::to_string(x.cols()));
    }
    // Row j of B_k is b_{k,j}^H.
    return basis.transpose().cwiseProduct(x).colwise().sum().transpose();
}

CVector sense_forward(const std::vector<CMatrix>& bases, const std::vector<CMatrix>& xs)
{
    if (bases.size() != xs.size() || bases.empty()) {
        throw DimensionError("sense_forward: need one data matrix per basis");
    }
    CVector y = sense(bases[0], xs[0]);
    for (std::size_t k = 1; k < bases.size(); ++k) {
        y += sense(bases[k], xs[k]);
    }
    return y;
}

CMatrix sense_adjoint(const CMatrix& basis, const CVector& v)
{
    if (basis.rows() != v.size()) {
        throw DimensionError("sense_adjoint: basis has " + std::to_string(basis.rows()) +
                             " rows, v has " + std::to_string(v.size()) + " entries");
    }
    return basis.adjoint() * v.asDiagonal();
}

Measurement add_noise(const CVector& y, double snr_db, std::uint64_t seed)
{
    Measurement m{y, std::nullopt, seed};
    if (std::isinf(snr_db) && snr_db > 0) {
        return m;
    }
    if (!std::isfinite(snr_db)) {
        throw DomainError("add_noise: snr_db must be finite or +inf");
    }
    m.snr_db           = snr_db;
    const double sigma = y.norm() / std::pow(10.0, snr_db / 20.0);
    if (sigma == 0.0) {
        return m;
    }
    Rng     rng(seed);
    CVector z(y.size());
    for (Index j = 0; j < y.size(); ++j) {
        z[j] = rng.complex_normal();
    }
    m.y = y + (sigma / z.norm()) * z;
    return m;
}

// --- gt v1 -------------------------------------------------------------------

namespace {

json complex_json(Complex c) { return json::array({c.real(), c.imag()}); }

json vector_json(const CVector& v)
{
    json arr = json::array();
    for (Index i = 0; i < v.size(); ++i) arr.push_back(complex_json(v[i]));
    return arr;
}

json table_json(const std::vector<std::vector<CVector>>& t)
{
    json out = json::array();
    for (const auto& row : t) {
        json r = json::array();
        for (const auto& v : row) r.push_back(vector_json(v));
        out.push_back(std::move(r));
    }
    return out;
}

Complex complex_from(const json& j)
{
    if (!j.is_array() || j.size() != 2 || !j[0].is_number() || !j[1].is_number()) {
        throw ParseError("gt v1: complex values are [re, im] pairs");
    }
    return {j[0].get<double>(), j[1].get<double>()};
}

std::vector<std::vector<CVector>> table_from(const json& j, const Dims& d, const char* field)
{
    if (!j.is_array() || static_cast<Index>(j.size()) != d.K) {
        throw ParseError(std::string("gt v1: '") + field + "' must have K rows");
    }
    std::vector<std::vector<CVector>> out(d.K);
    for (Index k = 0; k < d.K; ++k) {
        if (!j[k].is_array() || static_cast<Index>(j[k].size()) != d.r) {
            throw ParseError(std::string("gt v1: '") + field + "' rows must have r entries");
        }
        for (Index p = 0; p < d.r; ++p) {
            const json& v = j[k][p];
            if (!v.is_array() || static_cast<Index>(v.size()) != d.s) {
                throw ParseError(std::string("gt v1: '") + field + "' vectors must have length s");
            }
            CVector c(d.s);
            for (Index u = 0; u < d.s; ++u) c[u] = complex_from(v[u]);
            out[k].push_back(std::move(c));
        }
    }
    return out;
}

}  // namespace

SpikeDocument to_document(const GroundTruth& gt, std::vector<std::string> basis_files)
{
    SpikeDocument doc;
    doc.dims   = gt.dims;
    doc.taus   = gt.taus;
    doc.amps   = gt.amps;
    doc.coeffs = gt.coeffs;
    doc.products.assign(gt.dims.K, {});
    for (Index k = 0; k < gt.dims.K; ++k) {
        for (Index p = 0; p < gt.dims.r; ++p) doc.products[k].push_back(gt.product(k, p));
    }
    doc.basis_files = std::move(basis_files);
    return doc;
}

void write_spike_document(const std::filesystem::path& path, const SpikeDocument& doc)
{
    json j;
    j["schema"] = "gt v1";
    j["K"]      = doc.dims.K;
    j["r"]      = doc.dims.r;
    j["s"]      = doc.dims.s;
    j["n"]      = doc.dims.n;
    json taus   = json::array();
    for (Index k = 0; k < doc.taus.rows(); ++k) {
        json row = json::array();
        for (Index p = 0; p < doc.taus.cols(); ++p) row.push_back(doc.taus(k, p));
        taus.push_back(std::move(row));
    }
    j["taus"] = std::move(taus);
    if (doc.amps) {
        json amps = json::array();
        for (Index k = 0; k < doc.amps->rows(); ++k) {
            json row = json::array();
            for (Index p = 0; p < doc.amps->cols(); ++p) row.push_back(complex_json((*doc.amps)(k, p)));
            amps.push_back(std::move(row));
        }
        j["amps"] = std::move(amps);
    }
    if (!doc.coeffs.empty()) {
        j["coeffs"] = table_json(doc.coeffs);
    }
    j["products"] = table_json(doc.products);
    if (!doc.basis_files.empty()) {
        j["bases"] = doc.basis_files;
    }
    std::ofstream os(path);
    if (!os) {
        throw IOError("cannot open " + path.string() + " for writing");
    }
    os << j.dump(1) << '\n';
}

SpikeDocument read_spike_document(const std::filesystem::path& path)
{
    std::ifstream is(path);
    if (!is) {
        throw IOError("cannot open " + path.string());
    }
    json j;
    try {
        j = json::parse(is);
    } catch (const json::parse_error& e) {
        throw ParseError(path.string() + ": " + e.what());
    }
    static const std::set<std::string> known = {"schema", "K",    "r",      "s",        "n",
                                                "taus",   "amps", "coeffs", "products", "bases"};
    for (const auto& item : j.items()) {
        if (!known.count(item.key())) {
            throw ParseError(path.string() + ": unknown key '" + item.key() + "'");
        }
    }
    if (j.value("schema", "") != "gt v1") {
        throw ParseError(path.string() + ": schema must be 'gt v1'");
    }
    try {
        SpikeDocument doc;
        doc.dims = Dims{j.at("K").get<Index>(), j.at("r").get<Index>(), j.at("s").get<Index>(),
                        j.at("n").get<Index>()};
        const Dims& d = doc.dims;
        doc.taus.resize(d.K, d.r);
        const json& taus = j.at("taus");
        if (!taus.is_array() || static_cast<Index>(taus.size()) != d.K) {
            throw ParseError("gt v1: 'taus' must have K rows");
        }
        for (Index k = 0; k < d.K; ++k) {
            if (static_cast<Index>(taus[k].size()) != d.r) {
                throw ParseError("gt v1: 'taus' rows must have r entries");
            }
            for (Index p = 0; p < d.r; ++p) doc.taus(k, p) = taus[k][p].get<double>();
        }
        if (j.contains("amps")) {
            CMatrix amps(d.K, d.r);
            for (Index k = 0; k < d.K; ++k) {
                for (Index p = 0; p < d.r; ++p) amps(k, p) = complex_from(j["amps"].at(k).at(p));
            }
            doc.amps = std::move(amps);
        }
        if (j.contains("coeffs")) {
            doc.coeffs = table_from(j["coeffs"], d, "coeffs");
        }
        doc.products = table_from(j.at("products"), d, "products");
        if (j.contains("bases")) {
            doc.basis_files = j["bases"].get<std::vector<std::string>>();
        }
        return doc;
    } catch (const json::exception& e) {
        throw ParseError(path.string() + ": " + e.what());
    } catch (const ParseError& e) {
        throw ParseError(path.string() + ": " + e.what());
    }
}

std::vector<std::filesystem::path> save_ground_truth(const std::filesystem::path& dir,
                                                     const GroundTruth&           gt)
{
    std::vector<std::filesystem::path> written;
    std::vector<std::string>           names;
    for (Index k = 0; k < gt.dims.K; ++k) {
        names.push_back("basis_" + std::to_string(k) + ".cmx");
        linalg::save_cmx(dir / names.back(), gt.bases[k]);
        written.push_back(dir / names.back());
    }
    write_spike_document(dir / "gt.json", to_document(gt, names));
    written.push_back(dir / "gt.json");
    return written;
}

GroundTruth load_ground_truth(const std::filesystem::path& gt_json)
{
    SpikeDocument doc = read_spike_document(gt_json);
    if (!doc.amps || doc.coeffs.empty() ||
        static_cast<Index>(doc.basis_files.size()) != doc.dims.K) {
        throw ParseError(gt_json.string() + ": ground truth needs amps, coeffs and K bases");
    }
    GroundTruth gt;
    gt.dims   = doc.dims;
    gt.taus   = doc.taus;
    gt.amps   = *doc.amps;
    gt.coeffs = doc.coeffs;
    for (const auto& name : doc.basis_files) {
        CMatrix b = linalg::load_cmx(gt_json.parent_path() / name);
        if (b.rows() != gt.dims.n || b.cols() != gt.dims.s) {
            throw DimensionError(name + ": basis must be n x s");
        }
        gt.bases.push_back(std::move(b));
    }
    return gt;
}

void save_measurement_csv(const std::filesystem::path& path, const CVector& y)
{
    std::ofstream os(path);
    if (!os) {
        throw IOError("cannot open " + path.string() + " for writing");
    }
    os << "j,re,im\n";
    for (Index j = 0; j < y.size(); ++j) {
        os << j << ',' << linalg::format_double(y[j].real()) << ','
           << linalg::format_double(y[j].imag()) << '\n';
    }
}

CVector load_measurement_csv(const std::filesystem::path& path)
{
    std::ifstream is(path);
    if (!is) {
        throw IOError("cannot open " + path.string());
    }
    std::string line;
    if (!std::getline(is, line) || line != "j,re,im") {
        throw ParseError(path.string() + ": expected header 'j,re,im'", 1);
    }
    std::vector<Complex> values;
    std::size_t          lineno = 1;
    while (std::getline(is, line)) {
        ++lineno;
        if (line.empty()) continue;
        std::vector<std::string> fields;
        std::stringstream        ss(line);
        for (std::string f; std::getline(ss, f, ',');) fields.push_back(f);
        if (fields.size() != 3) {
            throw ParseError(path.string() + ": expected 3 fields", lineno);
        }
        if (fields[0] != std::to_string(values.size())) {
            throw ParseError(path.string() + ": rows must be numbered 0, 1, ...", lineno);
        }
        values.emplace_back(linalg::parse_double(fields[1], lineno),
                            linalg::parse_double(fields[2], lineno));
    }
    CVector y(static_cast<Index>(values.size()));
    for (std::size_t j = 0; j < values.size(); ++j) y[static_cast<Index>(j)] = values[j];
    return y;
}

}  // namespace blindsr::model
