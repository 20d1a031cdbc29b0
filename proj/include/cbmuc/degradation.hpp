#pragma once

// Residual-life distributions and the expected maintenance cost curve
//   omega(t) = kappa * (wp*S(t) + wf*(1 - S(t))) / (int_0^t S(z) dz + t_o)
// Time is measured in maintenance epochs.

#include <map>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace cbmuc {

class DegradationError : public std::domain_error {
public:
    using std::domain_error::domain_error;
};

struct ResidualLife {
    enum class Kind { Exponential, Weibull, Tabulated };
    Kind kind = Kind::Exponential;
    double rate = 0.0;   // exponential mu
    double shape = 1.0;  // Weibull k
    double scale = 1.0;  // Weibull beta
    std::vector<std::pair<double, double>> table;  // (t, S) with t strictly increasing
    double age = 0.0;    // t_o

    static ResidualLife exponential(double rate, double age = 0.0);
    static ResidualLife weibull(double shape, double scale, double age = 0.0);
    static ResidualLife tabulated(std::vector<std::pair<double, double>> points, double age = 0.0);
    void validate() const;
};

inline constexpr int kDefaultSubsteps = 64;

double survival(const ResidualLife& rld, double t);
/// Composite trapezoid over ceil(substeps * t) panels.
double integrated_survival(const ResidualLife& rld, double t, int substeps = kDefaultSubsteps);
double maintenance_cost(const ResidualLife& rld, double kappa, double preventive, double failure,
                        double t, int substeps = kDefaultSubsteps);

/// Evaluation time used for epoch m (0-based): its midpoint, or its end for
/// the first epoch of a brand-new unit.
double epoch_time(const ResidualLife& rld, int m);

std::vector<double> cost_curve(const ResidualLife& rld, double kappa, double preventive,
                               double failure, int epochs, int substeps = kDefaultSubsteps);

/// Zero-based index of the first minimum.
int argmin_epoch(const std::vector<double>& curve);

/// RLD spec: `gen_id kind params... t_o` per line; kinds are
/// `exp <rate>`, `weibull <shape> <scale>`, `table <file>`. Table files hold
/// `t S` pairs and are resolved relative to `base_dir`.
std::map<int, ResidualLife> parse_rld_spec(std::string_view text, const std::string& base_dir);
std::map<int, ResidualLife> load_rld_spec(const std::string& path);
std::vector<std::pair<double, double>> parse_survival_table(std::string_view text);

}  // namespace cbmuc
