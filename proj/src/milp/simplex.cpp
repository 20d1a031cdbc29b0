#include "simplex.hpp"

#include <algorithm>
#include <cmath>

namespace cbmuc::milp::detail {

BoundedSimplex::BoundedSimplex(const LinearModel& model, const Tolerances& tol,
                               const Limits& limits)
    : tol_(tol), limits_(limits) {
    build_columns(model);
}

void BoundedSimplex::build_columns(const LinearModel& model) {
    m_ = model.num_rows();
    n_ = model.num_columns();
    total_ = n_ + 2 * m_;

    // transpose row storage into column storage for the structurals
    std::vector<int> count(n_, 0);
    for (const Row& r : model.rows())
        for (int c : r.cols) ++count[c];
    col_start_.assign(total_ + 1, 0);
    for (int j = 0; j < n_; ++j) col_start_[j + 1] = col_start_[j] + count[j];
    for (int i = 0; i < 2 * m_; ++i) col_start_[n_ + i + 1] = col_start_[n_ + i] + 1;
    row_index_.assign(col_start_[total_], 0);
    value_.assign(col_start_[total_], 0.0);
    std::vector<int> fill(col_start_.begin(), col_start_.begin() + n_);
    for (int i = 0; i < m_; ++i) {
        const Row& r = model.row(i);
        for (std::size_t k = 0; k < r.cols.size(); ++k) {
            int pos = fill[r.cols[k]]++;
            row_index_[pos] = i;
            value_[pos] = r.coefs[k];
        }
    }
    for (int i = 0; i < m_; ++i) {
        int ls = col_start_[n_ + i];
        row_index_[ls] = i;
        value_[ls] = -1.0;
        int as = col_start_[n_ + m_ + i];
        row_index_[as] = i;
        value_[as] = 1.0;
    }

    lower_.assign(total_, 0.0);
    upper_.assign(total_, 0.0);
    cost_.assign(total_, 0.0);
    for (int j = 0; j < n_; ++j) {
        const Column& c = model.column(j);
        lower_[j] = c.lower;
        upper_[j] = c.upper;
        cost_[j] = c.cost;
    }
    for (int i = 0; i < m_; ++i) {
        const Row& r = model.row(i);
        double lo = -kInf, hi = kInf;
        switch (r.sense) {
        case Sense::LessEqual: hi = r.rhs; break;
        case Sense::GreaterEqual: lo = r.rhs; break;
        case Sense::Equal: lo = hi = r.rhs; break;
        }
        lower_[n_ + i] = lo;
        upper_[n_ + i] = hi;
    }
    x_.assign(total_, 0.0);
    state_.assign(total_, VarState::AtLower);
    head_.assign(m_, -1);
}

void BoundedSimplex::set_structural_bounds(int j, double lower, double upper) {
    lower_[j] = lower;
    upper_[j] = upper;
}

void BoundedSimplex::place_nonbasic(int j) {
    VarState s = state_[j];
    bool lo = std::isfinite(lower_[j]);
    bool hi = std::isfinite(upper_[j]);
    if (s == VarState::AtUpper && hi) {
        x_[j] = upper_[j];
    } else if (s == VarState::AtLower && lo) {
        x_[j] = lower_[j];
    } else if (lo) {
        state_[j] = VarState::AtLower;
        x_[j] = lower_[j];
    } else if (hi) {
        state_[j] = VarState::AtUpper;
        x_[j] = upper_[j];
    } else {
        state_[j] = VarState::FreeZero;
        x_[j] = 0.0;
    }
}

void BoundedSimplex::crash() {
    for (int j = 0; j < n_; ++j) {
        bool lo = std::isfinite(lower_[j]);
        bool hi = std::isfinite(upper_[j]);
        if (lo && hi && std::abs(upper_[j]) < std::abs(lower_[j]))
            state_[j] = VarState::AtUpper;
        else if (lo)
            state_[j] = VarState::AtLower;
        else if (hi)
            state_[j] = VarState::AtUpper;
        else
            state_[j] = VarState::FreeZero;
        place_nonbasic(j);
    }
    std::vector<double> activity(m_, 0.0);
    for (int j = 0; j < n_; ++j) {
        if (x_[j] == 0.0) continue;
        for (int p = col_start_[j]; p < col_start_[j + 1]; ++p)
            activity[row_index_[p]] += value_[p] * x_[j];
    }
    binv_.assign(static_cast<std::size_t>(m_) * m_, 0.0);
    for (int i = 0; i < m_; ++i) {
        int s = n_ + i;
        int a = n_ + m_ + i;
        double r = activity[i];
        lower_[a] = 0.0;
        upper_[a] = 0.0;
        if (r >= lower_[s] - tol_.feasibility && r <= upper_[s] + tol_.feasibility) {
            head_[i] = s;
            state_[s] = VarState::Basic;
            x_[s] = r;
            state_[a] = VarState::AtLower;
            x_[a] = 0.0;
            binv_[static_cast<std::size_t>(i) * m_ + i] = -1.0;
        } else {
            double target = r < lower_[s] ? lower_[s] : upper_[s];
            state_[s] = r < lower_[s] ? VarState::AtLower : VarState::AtUpper;
            x_[s] = target;
            double residual = r - target;  // a x - s
            double sign = residual > 0 ? -1.0 : 1.0;
            value_[col_start_[a]] = sign;
            upper_[a] = kInf;
            head_[i] = a;
            state_[a] = VarState::Basic;
            x_[a] = std::abs(residual);
            binv_[static_cast<std::size_t>(i) * m_ + i] = sign;
        }
    }
    pivots_since_refactor_ = 0;
}

bool BoundedSimplex::refactor() {
    const std::size_t m = static_cast<std::size_t>(m_);
    std::vector<double> b(m * m, 0.0);
    for (int k = 0; k < m_; ++k) {
        int j = head_[k];
        for (int p = col_start_[j]; p < col_start_[j + 1]; ++p)
            b[static_cast<std::size_t>(row_index_[p]) * m + k] = value_[p];
    }
    std::vector<double> inv(m * m, 0.0);
    for (std::size_t i = 0; i < m; ++i) inv[i * m + i] = 1.0;
    // Gauss-Jordan with partial pivoting
    for (std::size_t c = 0; c < m; ++c) {
        std::size_t piv = c;
        double best = std::abs(b[c * m + c]);
        for (std::size_t r = c + 1; r < m; ++r) {
            double v = std::abs(b[r * m + c]);
            if (v > best) {
                best = v;
                piv = r;
            }
        }
        if (best < 1e-11) return false;
        if (piv != c) {
            for (std::size_t k = 0; k < m; ++k) {
                std::swap(b[piv * m + k], b[c * m + k]);
                std::swap(inv[piv * m + k], inv[c * m + k]);
            }
        }
        double d = 1.0 / b[c * m + c];
        for (std::size_t k = 0; k < m; ++k) {
            b[c * m + k] *= d;
            inv[c * m + k] *= d;
        }
        for (std::size_t r = 0; r < m; ++r) {
            if (r == c) continue;
            double f = b[r * m + c];
            if (f == 0.0) continue;
            for (std::size_t k = 0; k < m; ++k) {
                b[r * m + k] -= f * b[c * m + k];
                inv[r * m + k] -= f * inv[c * m + k];
            }
        }
    }
    // inv = B^-1 with rows indexed by basis position
    binv_ = std::move(inv);
    pivots_since_refactor_ = 0;
    return true;
}

void BoundedSimplex::recompute_basic_values() {
    std::vector<double> rhs(m_, 0.0);
    for (int j = 0; j < total_; ++j) {
        if (state_[j] == VarState::Basic || x_[j] == 0.0) continue;
        for (int p = col_start_[j]; p < col_start_[j + 1]; ++p)
            rhs[row_index_[p]] -= value_[p] * x_[j];
    }
    for (int k = 0; k < m_; ++k) {
        const double* row = &binv_[static_cast<std::size_t>(k) * m_];
        double s = 0.0;
        for (int i = 0; i < m_; ++i) s += row[i] * rhs[i];
        x_[head_[k]] = s;
    }
}

void BoundedSimplex::compute_duals(const std::vector<double>& cost,
                                   std::vector<double>& y) const {
    y.assign(m_, 0.0);
    for (int k = 0; k < m_; ++k) {
        double cb = cost[head_[k]];
        if (cb == 0.0) continue;
        const double* row = &binv_[static_cast<std::size_t>(k) * m_];
        for (int i = 0; i < m_; ++i) y[i] += cb * row[i];
    }
}

double BoundedSimplex::reduced_cost(int j, const std::vector<double>& cost,
                                    const std::vector<double>& y) const {
    double d = cost[j];
    for (int p = col_start_[j]; p < col_start_[j + 1]; ++p) d -= y[row_index_[p]] * value_[p];
    return d;
}

void BoundedSimplex::ftran(int j, std::vector<double>& alpha) const {
    alpha.assign(m_, 0.0);
    for (int p = col_start_[j]; p < col_start_[j + 1]; ++p) {
        int i = row_index_[p];
        double v = value_[p];
        for (int k = 0; k < m_; ++k) alpha[k] += binv_[static_cast<std::size_t>(k) * m_ + i] * v;
    }
}

void BoundedSimplex::pivot(int r, int entering, const std::vector<double>& alpha) {
    const std::size_t m = static_cast<std::size_t>(m_);
    double* prow = &binv_[static_cast<std::size_t>(r) * m];
    double inv = 1.0 / alpha[r];
    for (std::size_t i = 0; i < m; ++i) prow[i] *= inv;
    for (int k = 0; k < m_; ++k) {
        if (k == r || alpha[k] == 0.0) continue;
        double f = alpha[k];
        double* row = &binv_[static_cast<std::size_t>(k) * m];
        for (std::size_t i = 0; i < m; ++i) row[i] -= f * prow[i];
    }
    head_[r] = entering;
    state_[entering] = VarState::Basic;
    ++iterations_;
    if (++pivots_since_refactor_ >= limits_.refactor_interval) {
        if (refactor()) recompute_basic_values();
    }
}

double BoundedSimplex::max_primal_infeasibility() const {
    double worst = 0.0;
    for (int k = 0; k < m_; ++k) {
        int j = head_[k];
        worst = std::max({worst, lower_[j] - x_[j], x_[j] - upper_[j]});
    }
    return worst;
}

BoundedSimplex::Outcome BoundedSimplex::primal(const std::vector<double>& cost) {
    std::vector<double> y, alpha;
    int degenerate_run = 0;
    bool bland = false;
    for (;;) {
        if (iterations_ >= limits_.iteration_limit) return Outcome::Limit;
        compute_duals(cost, y);

        int q = -1;
        int dir = 0;
        double best = 0.0;
        for (int j = 0; j < total_; ++j) {
            VarState s = state_[j];
            if (s == VarState::Basic || is_fixed(j)) continue;
            double d = reduced_cost(j, cost, y);
            int dj = 0;
            if (s == VarState::AtLower && d < -tol_.optimality) dj = 1;
            else if (s == VarState::AtUpper && d > tol_.optimality) dj = -1;
            else if (s == VarState::FreeZero && std::abs(d) > tol_.optimality) dj = d > 0 ? -1 : 1;
            if (dj == 0) continue;
            if (bland) {
                q = j;
                dir = dj;
                break;
            }
            if (std::abs(d) > best) {
                best = std::abs(d);
                q = j;
                dir = dj;
            }
        }
        if (q < 0) return Outcome::Optimal;

        ftran(q, alpha);

        // Harris two-pass ratio test; Bland mode takes the minimum ratio with
        // smallest-index tie-break
        double tmax = kInf;
        for (int k = 0; k < m_; ++k) {
            if (std::abs(alpha[k]) <= tol_.pivot) continue;
            int b = head_[k];
            double rate = -alpha[k] * dir;
            double lim = kInf;
            if (rate < 0 && std::isfinite(lower_[b]))
                lim = (x_[b] - lower_[b] + tol_.feasibility) / -rate;
            else if (rate > 0 && std::isfinite(upper_[b]))
                lim = (upper_[b] + tol_.feasibility - x_[b]) / rate;
            // a slightly infeasible basic must not push the bound below zero
            tmax = std::min(tmax, std::max(0.0, lim));
        }
        int r = -1;
        double t = kInf;
        double best_pivot = 0.0;
        for (int k = 0; k < m_; ++k) {
            if (std::abs(alpha[k]) <= tol_.pivot) continue;
            int b = head_[k];
            double rate = -alpha[k] * dir;
            double lim = kInf;
            if (rate < 0 && std::isfinite(lower_[b]))
                lim = std::max(0.0, (x_[b] - lower_[b]) / -rate);
            else if (rate > 0 && std::isfinite(upper_[b]))
                lim = std::max(0.0, (upper_[b] - x_[b]) / rate);
            if (!std::isfinite(lim)) continue;
            if (bland) {
                if (lim < t - 1e-12 || (lim <= t + 1e-12 && r >= 0 && b < head_[r])) {
                    t = lim;
                    r = k;
                }
            } else if (lim <= tmax && std::abs(alpha[k]) > best_pivot) {
                best_pivot = std::abs(alpha[k]);
                t = lim;
                r = k;
            }
        }
        if (r < 0 && std::isfinite(tmax)) {
            for (int k = 0; k < m_; ++k) {
                if (std::abs(alpha[k]) <= tol_.pivot) continue;
                int b = head_[k];
                double rate = -alpha[k] * dir;
                double lim = kInf;
                if (rate < 0 && std::isfinite(lower_[b]))
                    lim = std::max(0.0, (x_[b] - lower_[b]) / -rate);
                else if (rate > 0 && std::isfinite(upper_[b]))
                    lim = std::max(0.0, (upper_[b] - x_[b]) / rate);
                if (lim < t) {
                    t = lim;
                    r = k;
                }
            }
        }
        double flip = (std::isfinite(lower_[q]) && std::isfinite(upper_[q]))
                          ? upper_[q] - lower_[q]
                          : kInf;
        if (r < 0 && !std::isfinite(flip)) {
            // confirm the ray on a fresh factorization before reporting it
            if (pivots_since_refactor_ == 0) return Outcome::Unbounded;
            if (!refactor()) return Outcome::Numerical;
            recompute_basic_values();
            continue;
        }

        if (flip <= t) {
            double step = dir * flip;
            for (int k = 0; k < m_; ++k) x_[head_[k]] -= alpha[k] * step;
            state_[q] = dir > 0 ? VarState::AtUpper : VarState::AtLower;
            x_[q] = dir > 0 ? upper_[q] : lower_[q];
            ++iterations_;
            degenerate_run = 0;
            bland = false;
            continue;
        }

        if (std::abs(alpha[r]) < 1e-11) return Outcome::Numerical;
        double step = dir * t;
        for (int k = 0; k < m_; ++k) x_[head_[k]] -= alpha[k] * step;
        x_[q] += step;
        int leaving = head_[r];
        double rate = -alpha[r] * dir;
        if (rate < 0) {
            x_[leaving] = lower_[leaving];
            state_[leaving] = VarState::AtLower;
        } else {
            x_[leaving] = upper_[leaving];
            state_[leaving] = VarState::AtUpper;
        }
        pivot(r, q, alpha);

        if (t <= 1e-12) {
            if (++degenerate_run >= limits_.bland_threshold) bland = true;
        } else {
            degenerate_run = 0;
            bland = false;
        }
    }
}

bool BoundedSimplex::nonbasic_dual_feasible(const std::vector<double>& cost) {
    std::vector<double> y;
    compute_duals(cost, y);
    bool moved = false;
    for (int j = 0; j < total_; ++j) {
        VarState s = state_[j];
        if (s == VarState::Basic || is_fixed(j)) continue;
        double d = reduced_cost(j, cost, y);
        if (s == VarState::AtLower && d < -tol_.optimality) {
            if (!std::isfinite(upper_[j])) return false;
            state_[j] = VarState::AtUpper;
            x_[j] = upper_[j];
            moved = true;
        } else if (s == VarState::AtUpper && d > tol_.optimality) {
            if (!std::isfinite(lower_[j])) return false;
            state_[j] = VarState::AtLower;
            x_[j] = lower_[j];
            moved = true;
        } else if (s == VarState::FreeZero && std::abs(d) > tol_.optimality) {
            return false;
        }
    }
    if (moved) recompute_basic_values();
    return true;
}

BoundedSimplex::Outcome BoundedSimplex::dual(const std::vector<double>& cost) {
    if (!nonbasic_dual_feasible(cost)) return Outcome::Numerical;
    std::vector<double> y, alpha, rho(m_);
    for (;;) {
        if (iterations_ >= limits_.iteration_limit) return Outcome::Limit;
        int r = -1;
        double worst = tol_.feasibility;
        for (int k = 0; k < m_; ++k) {
            int b = head_[k];
            double v = std::max(lower_[b] - x_[b], x_[b] - upper_[b]);
            if (v > worst) {
                worst = v;
                r = k;
            }
        }
        if (r < 0) return Outcome::Optimal;
        int leaving = head_[r];
        bool to_lower = x_[leaving] < lower_[leaving];
        double target = to_lower ? lower_[leaving] : upper_[leaving];

        std::copy_n(&binv_[static_cast<std::size_t>(r) * m_], m_, rho.begin());
        compute_duals(cost, y);

        auto row_alpha = [&](int j) {
            double a = 0.0;
            for (int p = col_start_[j]; p < col_start_[j + 1]; ++p) a += rho[row_index_[p]] * value_[p];
            return a;
        };
        auto eligible = [&](int j, double a) {
            VarState s = state_[j];
            if (s == VarState::FreeZero) return std::abs(a) > tol_.pivot;
            if (to_lower)
                return (s == VarState::AtLower && a < -tol_.pivot) ||
                       (s == VarState::AtUpper && a > tol_.pivot);
            return (s == VarState::AtLower && a > tol_.pivot) ||
                   (s == VarState::AtUpper && a < -tol_.pivot);
        };

        std::vector<std::pair<int, double>> cand;
        double tmax = kInf;
        for (int j = 0; j < total_; ++j) {
            if (state_[j] == VarState::Basic || is_fixed(j)) continue;
            double a = row_alpha(j);
            if (!eligible(j, a)) continue;
            double d = reduced_cost(j, cost, y);
            cand.emplace_back(j, a);
            tmax = std::min(tmax, (std::abs(d) + tol_.optimality) / std::abs(a));
        }
        if (cand.empty()) return Outcome::Infeasible;
        int q = -1;
        double best_pivot = 0.0;
        for (auto [j, a] : cand) {
            double d = reduced_cost(j, cost, y);
            if (std::abs(d) / std::abs(a) <= tmax && std::abs(a) > best_pivot) {
                best_pivot = std::abs(a);
                q = j;
            }
        }
        ftran(q, alpha);
        if (std::abs(alpha[r]) < 1e-11) return Outcome::Numerical;
        double dq = (x_[leaving] - target) / alpha[r];
        for (int k = 0; k < m_; ++k) x_[head_[k]] -= alpha[k] * dq;
        x_[q] += dq;
        x_[leaving] = target;
        state_[leaving] = to_lower ? VarState::AtLower : VarState::AtUpper;
        pivot(r, q, alpha);
    }
}

Status BoundedSimplex::solve() {
    for (int attempt = 0; attempt < 2; ++attempt) {
        crash();
        std::vector<double> phase1(total_, 0.0);
        bool need_phase1 = false;
        for (int i = 0; i < m_; ++i) {
            int a = n_ + m_ + i;
            if (upper_[a] > 0.0) {
                phase1[a] = 1.0;
                need_phase1 = true;
            }
        }
        if (need_phase1) {
            Outcome o = primal(phase1);
            if (o == Outcome::Limit) return Status::IterationLimit;
            if (o == Outcome::Numerical) {
                if (!refactor()) continue;
                recompute_basic_values();
                o = primal(phase1);
                if (o != Outcome::Optimal) continue;
            }
            double infeas = 0.0;
            for (int i = 0; i < m_; ++i) infeas += x_[n_ + m_ + i];
            if (infeas > 1e-6) return Status::Infeasible;
            for (int i = 0; i < m_; ++i) {
                int a = n_ + m_ + i;
                upper_[a] = 0.0;
                if (state_[a] != VarState::Basic) {
                    state_[a] = VarState::AtLower;
                    x_[a] = 0.0;
                }
            }
        }
        Outcome o = primal(cost_);
        if (o == Outcome::Limit) return Status::IterationLimit;
        if (o == Outcome::Unbounded) return Status::Unbounded;
        if (o == Outcome::Numerical) continue;
        if (max_primal_infeasibility() > 1e-6) {
            if (!refactor()) continue;
            recompute_basic_values();
            if (max_primal_infeasibility() > 1e-6) {
                o = dual(cost_);
                if (o == Outcome::Infeasible) return Status::Infeasible;
                if (o != Outcome::Optimal) continue;
            }
            o = primal(cost_);
            if (o != Outcome::Optimal) continue;
        }
        return Status::Optimal;
    }
    return Status::IterationLimit;
}

Status BoundedSimplex::reoptimize(const Basis& basis) {
    head_ = basis.head;
    state_ = basis.state;
    for (int i = 0; i < m_; ++i) {
        lower_[n_ + m_ + i] = 0.0;
        upper_[n_ + m_ + i] = 0.0;
    }
    for (int j = 0; j < total_; ++j)
        if (state_[j] != VarState::Basic) place_nonbasic(j);
    if (!refactor()) return solve();
    recompute_basic_values();
    Outcome o = dual(cost_);
    if (o == Outcome::Infeasible) return Status::Infeasible;
    if (o != Outcome::Optimal) return solve();
    o = primal(cost_);
    if (o == Outcome::Unbounded) return Status::Unbounded;
    if (o != Outcome::Optimal || max_primal_infeasibility() > 1e-6) return solve();
    return Status::Optimal;
}

Basis BoundedSimplex::basis() const { return Basis{head_, state_}; }

double BoundedSimplex::objective() const {
    double s = 0.0;
    for (int j = 0; j < n_; ++j) s += cost_[j] * x_[j];
    return s;
}

std::vector<double> BoundedSimplex::structural_values() const {
    return std::vector<double>(x_.begin(), x_.begin() + n_);
}

}  // namespace cbmuc::milp::detail
