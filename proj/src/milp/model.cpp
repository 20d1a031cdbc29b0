#include <algorithm>
#include <cmath>

#include "cbmuc/milp.hpp"

namespace cbmuc::milp {

int LinearModel::add_column(std::string name, double lower, double upper, double cost,
                            bool integer) {
    columns_.push_back(Column{std::move(name), lower, upper, cost, integer});
    return num_columns() - 1;
}

int LinearModel::add_row(std::string name, const std::vector<std::pair<int, double>>& terms,
                         Sense sense, double rhs) {
    Row r;
    r.name = std::move(name);
    r.sense = sense;
    r.rhs = rhs;
    // merge duplicate columns so the column storage stays canonical
    std::vector<std::pair<int, double>> sorted(terms);
    std::sort(sorted.begin(), sorted.end(),
              [](const auto& a, const auto& b) { return a.first < b.first; });
    for (const auto& [c, v] : sorted) {
        if (c < 0 || c >= num_columns())
            throw ModelError("row '" + r.name + "' references unknown column");
        if (!r.cols.empty() && r.cols.back() == c)
            r.coefs.back() += v;
        else {
            r.cols.push_back(c);
            r.coefs.push_back(v);
        }
    }
    rows_.push_back(std::move(r));
    return num_rows() - 1;
}

int LinearModel::find_column(const std::string& name) const {
    for (int j = 0; j < num_columns(); ++j)
        if (columns_[j].name == name) return j;
    return -1;
}

double LinearModel::evaluate(const std::vector<double>& x) const {
    double s = offset_;
    for (int j = 0; j < num_columns(); ++j) s += columns_[j].cost * x.at(j);
    return s;
}

double LinearModel::max_violation(const std::vector<double>& x) const {
    double worst = 0.0;
    for (int j = 0; j < num_columns(); ++j) {
        worst = std::max(worst, columns_[j].lower - x.at(j));
        worst = std::max(worst, x.at(j) - columns_[j].upper);
    }
    for (const Row& r : rows_) {
        double a = 0.0;
        for (std::size_t k = 0; k < r.cols.size(); ++k) a += r.coefs[k] * x.at(r.cols[k]);
        if (r.sense != Sense::GreaterEqual) worst = std::max(worst, a - r.rhs);
        if (r.sense != Sense::LessEqual) worst = std::max(worst, r.rhs - a);
    }
    return worst;
}

void LinearModel::validate() const {
    for (const Column& c : columns_) {
        if (std::isnan(c.lower) || std::isnan(c.upper) || std::isnan(c.cost) ||
            !std::isfinite(c.cost))
            throw ModelError("column '" + c.name + "' has NaN or infinite data");
        if (c.lower > c.upper)
            throw ModelError("column '" + c.name + "' has lower bound above upper bound");
    }
    for (const Row& r : rows_) {
        if (!std::isfinite(r.rhs)) throw ModelError("row '" + r.name + "' has non-finite rhs");
        for (double v : r.coefs)
            if (!std::isfinite(v)) throw ModelError("row '" + r.name + "' has non-finite coefficient");
    }
    if (!std::isfinite(offset_)) throw ModelError("objective offset is not finite");
}

bool LinearModel::has_integers() const {
    return std::any_of(columns_.begin(), columns_.end(),
                       [](const Column& c) { return c.integer; });
}

const char* to_string(Status s) {
    switch (s) {
    case Status::Optimal: return "Optimal";
    case Status::Infeasible: return "Infeasible";
    case Status::Unbounded: return "Unbounded";
    case Status::IterationLimit: return "IterationLimit";
    case Status::NodeLimit: return "NodeLimit";
    }
    return "?";
}

}  // namespace cbmuc::milp
