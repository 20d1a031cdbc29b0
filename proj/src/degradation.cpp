#include "cbmuc/degradation.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <sstream>

#include "cbmuc/case_model.hpp"

namespace cbmuc {

ResidualLife ResidualLife::exponential(double rate, double age) {
    ResidualLife r;
    r.kind = Kind::Exponential;
    r.rate = rate;
    r.age = age;
    r.validate();
    return r;
}

ResidualLife ResidualLife::weibull(double shape, double scale, double age) {
    ResidualLife r;
    r.kind = Kind::Weibull;
    r.shape = shape;
    r.scale = scale;
    r.age = age;
    r.validate();
    return r;
}

ResidualLife ResidualLife::tabulated(std::vector<std::pair<double, double>> points, double age) {
    ResidualLife r;
    r.kind = Kind::Tabulated;
    for (auto& [t, s] : points) s = std::clamp(s, 0.0, 1.0);
    r.table = std::move(points);
    r.age = age;
    r.validate();
    return r;
}

void ResidualLife::validate() const {
    if (!(age >= 0) || !std::isfinite(age)) throw DegradationError("age must be finite and >= 0");
    switch (kind) {
    case Kind::Exponential:
        if (!(rate > 0) || !std::isfinite(rate)) throw DegradationError("exponential rate must be > 0");
        break;
    case Kind::Weibull:
        if (!(shape > 0) || !(scale > 0) || !std::isfinite(shape) || !std::isfinite(scale))
            throw DegradationError("Weibull shape and scale must be > 0");
        break;
    case Kind::Tabulated:
        if (table.empty()) throw DegradationError("survival table is empty");
        for (std::size_t i = 0; i < table.size(); ++i) {
            if (!(table[i].first >= 0) || !std::isfinite(table[i].first))
                throw DegradationError("survival table times must be finite and >= 0");
            if (table[i].second < 0 || table[i].second > 1)
                throw DegradationError("survival values must lie in [0, 1]");
            if (i > 0 && !(table[i].first > table[i - 1].first))
                throw DegradationError("survival table times must be strictly increasing");
            if (i > 0 && table[i].second > table[i - 1].second)
                throw DegradationError("survival table must be nonincreasing");
        }
        break;
    }
}

double survival(const ResidualLife& rld, double t) {
    if (!(t >= 0)) throw DegradationError("survival needs t >= 0");
    switch (rld.kind) {
    case ResidualLife::Kind::Exponential:
        return std::exp(-rld.rate * t);
    case ResidualLife::Kind::Weibull:
        return std::exp(-std::pow(t / rld.scale, rld.shape));
    case ResidualLife::Kind::Tabulated: {
        const auto& tb = rld.table;
        if (t <= tb.front().first) return t < tb.front().first ? 1.0 : tb.front().second;
        if (t >= tb.back().first) return tb.back().second;
        auto hi = std::upper_bound(tb.begin(), tb.end(), t,
                                   [](double v, const std::pair<double, double>& p) { return v < p.first; });
        auto lo = hi - 1;
        double w = (t - lo->first) / (hi->first - lo->first);
        return lo->second + w * (hi->second - lo->second);
    }
    }
    return 0.0;
}

double integrated_survival(const ResidualLife& rld, double t, int substeps) {
    if (!(t >= 0)) throw DegradationError("integration needs t >= 0");
    if (substeps < 1) throw DegradationError("substeps must be >= 1");
    if (t == 0) return 0.0;
    const int n = std::max(1, static_cast<int>(std::ceil(substeps * t - 1e-12)));
    const double h = t / n;
    double sum = 0.5 * (survival(rld, 0.0) + survival(rld, t));
    for (int i = 1; i < n; ++i) sum += survival(rld, i * h);
    return sum * h;
}

double maintenance_cost(const ResidualLife& rld, double kappa, double preventive, double failure,
                        double t, int substeps) {
    if (!(t >= 0)) throw DegradationError("maintenance cost needs t >= 0");
    double denom = integrated_survival(rld, t, substeps) + rld.age;
    if (!(denom > 0))
        throw DegradationError("maintenance cost is undefined at t = 0 for a unit of age 0");
    double s = survival(rld, t);
    return kappa * (preventive * s + failure * (1.0 - s)) / denom;
}

double epoch_time(const ResidualLife& rld, int m) {
    if (m == 0 && rld.age == 0.0) return 1.0;
    return m + 0.5;
}

std::vector<double> cost_curve(const ResidualLife& rld, double kappa, double preventive,
                               double failure, int epochs, int substeps) {
    if (epochs < 1) throw DegradationError("cost curve needs at least one epoch");
    std::vector<double> curve(epochs);
    for (int m = 0; m < epochs; ++m)
        curve[m] = maintenance_cost(rld, kappa, preventive, failure, epoch_time(rld, m), substeps);
    return curve;
}

int argmin_epoch(const std::vector<double>& curve) {
    if (curve.empty()) throw DegradationError("argmin of an empty curve");
    int best = 0;
    for (int m = 1; m < static_cast<int>(curve.size()); ++m)
        if (curve[m] < curve[best]) best = m;
    return best;
}

namespace {

double parse_number(const std::string& tok, int line) {
    char* end = nullptr;
    double v = std::strtod(tok.c_str(), &end);
    if (end == tok.c_str() || *end != '\0')
        throw DegradationError("line " + std::to_string(line) + ": expected a number, got '" + tok + "'");
    return v;
}

std::vector<std::string> words(const std::string& raw) {
    std::string line = raw.substr(0, raw.find('#'));
    std::istringstream ss(line);
    std::vector<std::string> out;
    std::string w;
    while (ss >> w) out.push_back(w);
    return out;
}

}  // namespace

std::vector<std::pair<double, double>> parse_survival_table(std::string_view text) {
    std::vector<std::pair<double, double>> pts;
    std::istringstream in{std::string(text)};
    std::string raw;
    int lineno = 0;
    while (std::getline(in, raw)) {
        ++lineno;
        auto w = words(raw);
        if (w.empty()) continue;
        if (w.size() != 2)
            throw DegradationError("line " + std::to_string(lineno) + ": expected 't S'");
        pts.emplace_back(parse_number(w[0], lineno), parse_number(w[1], lineno));
    }
    return pts;
}

std::map<int, ResidualLife> parse_rld_spec(std::string_view text, const std::string& base_dir) {
    std::map<int, ResidualLife> out;
    std::istringstream in{std::string(text)};
    std::string raw;
    int lineno = 0;
    while (std::getline(in, raw)) {
        ++lineno;
        auto w = words(raw);
        if (w.empty()) continue;
        auto fail = [&](const std::string& msg) {
            return DegradationError("line " + std::to_string(lineno) + ": " + msg);
        };
        if (w.size() < 3) throw fail("expected 'gen_id kind params... t_o'");
        int id = static_cast<int>(parse_number(w[0], lineno));
        const std::string& kind = w[1];
        ResidualLife r;
        try {
            if (kind == "exp" || kind == "exponential") {
                if (w.size() != 4) throw fail("exp takes <rate> <t_o>");
                r = ResidualLife::exponential(parse_number(w[2], lineno), parse_number(w[3], lineno));
            } else if (kind == "weibull") {
                if (w.size() != 5) throw fail("weibull takes <shape> <scale> <t_o>");
                r = ResidualLife::weibull(parse_number(w[2], lineno), parse_number(w[3], lineno),
                                          parse_number(w[4], lineno));
            } else if (kind == "table") {
                if (w.size() != 4) throw fail("table takes <file> <t_o>");
                std::string path = w[2];
                if (!path.empty() && path[0] != '/' && !base_dir.empty()) path = base_dir + "/" + path;
                r = ResidualLife::tabulated(parse_survival_table(read_file(path)), parse_number(w[3], lineno));
            } else {
                throw fail("unknown distribution kind '" + kind + "'");
            }
        } catch (const DegradationError& e) {
            std::string msg = e.what();
            if (msg.rfind("line ", 0) == 0) throw;
            throw fail(msg);
        }
        if (!out.emplace(id, r).second) throw fail("duplicate entry for generator " + std::to_string(id));
    }
    return out;
}

std::map<int, ResidualLife> load_rld_spec(const std::string& path) {
    auto slash = path.find_last_of('/');
    std::string dir = slash == std::string::npos ? "." : path.substr(0, slash);
    return parse_rld_spec(read_file(path), dir);
}

}  // namespace cbmuc
