#include "ecopt/effort.hpp"

#include "ecopt/error.hpp"
#include "ecopt/text_io.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>

namespace ecopt {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

// Tolerance below which a negative effort is attributed to rounding.
constexpr double kEffortSlack = 1e-9;

Eigen::Index find_location(const std::vector<std::string>& ids, const std::string& id) {
    auto it = std::lower_bound(ids.begin(), ids.end(), id);
    if (it == ids.end() || *it != id) throw DataError("unknown focal location '" + id + "'");
    return static_cast<Eigen::Index>(it - ids.begin());
}

// Objective key used to order feasible selections.
struct SelectionKey {
    double cost = std::numeric_limits<double>::infinity();
    std::vector<std::size_t> positions;  // ascending

    bool better_than(const SelectionKey& o) const {
        if (cost != o.cost) return cost < o.cost;
        if (positions.size() != o.positions.size()) return positions.size() < o.positions.size();
        return positions < o.positions;
    }
};

double canonical_cost(const EffortMatrix& effort, std::span<const std::size_t> positions) {
    double cost = 0.0;
    for (std::size_t i : positions) cost += effort.candidates[i].w;
    return cost;
}

Portfolio make_portfolio(const EffortMatrix& effort, double target, std::vector<std::size_t> positions,
                         Method method, bool order_by_effort) {
    std::sort(positions.begin(), positions.end());
    Portfolio p;
    p.focal = effort.focal;
    p.target_eci = target;
    p.method = method;
    p.achieved_eci = achieved_eci(effort, positions);
    p.total_effort = canonical_cost(effort, positions);
    p.feasible = p.achieved_eci >= target;
    std::vector<std::size_t> order = positions;
    if (order_by_effort) {
        std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
            return effort.candidates[a].w < effort.candidates[b].w;
        });
    }
    for (std::size_t i : order) {
        const auto& c = effort.candidates[i];
        p.selected.push_back({c.activity, c.id, c.w, c.pci});
    }
    return p;
}

Portfolio ordered_portfolio(const EffortMatrix& effort, double target, const std::vector<std::size_t>& order,
                            Method method) {
    std::vector<std::size_t> sorted = order;
    std::sort(sorted.begin(), sorted.end());
    Portfolio p = make_portfolio(effort, target, sorted, method, false);
    p.selected.clear();
    for (std::size_t i : order) {
        const auto& c = effort.candidates[i];
        p.selected.push_back({c.activity, c.id, c.w, c.pci});
    }
    return p;
}

// Greedy maximum-ECI set: adding candidates in descending complexity raises
// the average exactly while each one beats the running average.
std::vector<std::size_t> max_eci_selection(const EffortMatrix& effort) {
    std::vector<std::size_t> order(effort.candidates.size());
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        const auto &ca = effort.candidates[a], &cb = effort.candidates[b];
        if (ca.pci != cb.pci) return ca.pci > cb.pci;
        if (ca.w != cb.w) return ca.w < cb.w;
        return a < b;
    });
    std::vector<std::size_t> chosen;
    double current = achieved_eci(effort, chosen);
    for (std::size_t i : order) {
        std::vector<std::size_t> trial = chosen;
        trial.insert(std::upper_bound(trial.begin(), trial.end(), i), i);
        const double next = achieved_eci(effort, trial);
        if (!(next > current)) break;
        chosen = std::move(trial);
        current = next;
    }
    return chosen;
}

void require_baseline(const EffortMatrix& effort) {
    if (effort.baseline.empty())
        throw DataError("focal location " + effort.focal + " has no predicted specializations; ECI is undefined");
}

// Depth-first branch and bound for the covering knapsack
//   min sum w_i x_i  s.t.  sum g_i x_i >= deficit,  g_i > 0,
// with the fractional (LP) cover as lower bound. Leaves are accepted only
// through the exact ECI comparison, so floating slack in the search never
// changes the answer.
class CoverSearch {
public:
    CoverSearch(const EffortMatrix& effort, double target, std::vector<std::size_t> pool)
        : effort_(effort), target_(target) {
        for (const auto& b : effort.baseline) deficit_ += target - b.pci;
        std::sort(pool.begin(), pool.end(), [&](std::size_t a, std::size_t b) {
            const double ga = effort.candidates[a].pci - target, gb = effort.candidates[b].pci - target;
            const double wa = effort.candidates[a].w, wb = effort.candidates[b].w;
            // ga / wa > gb / wb without dividing by zero effort.
            const double lhs = ga * wb, rhs = gb * wa;
            if (lhs != rhs) return lhs > rhs;
            return a < b;
        });
        items_ = std::move(pool);
        const std::size_t n = items_.size();
        gain_.resize(n);
        cost_.resize(n);
        prefix_gain_.assign(n + 1, 0.0);
        prefix_cost_.assign(n + 1, 0.0);
        double gsum = 0.0, wsum = 0.0;
        for (std::size_t k = 0; k < n; ++k) {
            gain_[k] = effort.candidates[items_[k]].pci - target;
            cost_[k] = effort.candidates[items_[k]].w;
            prefix_gain_[k + 1] = prefix_gain_[k] + gain_[k];
            prefix_cost_[k + 1] = prefix_cost_[k] + cost_[k];
            gsum += std::abs(gain_[k]);
            wsum += cost_[k];
        }
        gain_slack_ = 1e-12 * (std::abs(deficit_) + gsum + 1.0);
        cost_slack_ = 1e-12 * (wsum + 1.0);
    }

    // Returns false when no subset of the pool meets the target.
    bool run(SelectionKey& best) {
        chosen_.clear();
        best_ = SelectionKey{};
        found_ = false;
        visit(0, 0.0, 0.0);
        best = best_;
        return found_;
    }

private:
    void visit(std::size_t k, double cost, double gain) {
        if (gain >= deficit_ - gain_slack_) {
            std::vector<std::size_t> positions = chosen_;
            std::sort(positions.begin(), positions.end());
            if (achieved_eci(effort_, positions) >= target_) {
                SelectionKey key{canonical_cost(effort_, positions), std::move(positions)};
                if (!found_ || key.better_than(best_)) {
                    best_ = std::move(key);
                    found_ = true;
                }
                return;
            }
        }
        const std::size_t n = items_.size();
        if (k == n) return;
        const double remaining = deficit_ - gain;
        if (prefix_gain_[n] - prefix_gain_[k] < remaining - gain_slack_) return;
        if (found_ && lower_bound(k, cost, remaining) > best_.cost + cost_slack_) return;

        chosen_.push_back(items_[k]);
        visit(k + 1, cost + cost_[k], gain + gain_[k]);
        chosen_.pop_back();
        visit(k + 1, cost, gain);
    }

    // Fractional cover of `remaining` using items k.. in ratio order.
    double lower_bound(std::size_t k, double cost, double remaining) const {
        if (remaining <= 0.0) return cost;
        const double need = prefix_gain_[k] + remaining;
        auto it = std::lower_bound(prefix_gain_.begin() + static_cast<std::ptrdiff_t>(k) + 1, prefix_gain_.end(), need);
        if (it == prefix_gain_.end()) return cost + (prefix_cost_.back() - prefix_cost_[k]);
        const auto j = static_cast<std::size_t>(it - prefix_gain_.begin());  // items k..j-1 suffice
        const double before = prefix_gain_[j - 1] - prefix_gain_[k];
        const double frac = std::clamp((remaining - before) / gain_[j - 1], 0.0, 1.0);
        return cost + (prefix_cost_[j - 1] - prefix_cost_[k]) + frac * cost_[j - 1];
    }

    const EffortMatrix& effort_;
    double target_;
    double deficit_ = 0.0;
    double gain_slack_ = 0.0;
    double cost_slack_ = 0.0;
    std::vector<std::size_t> items_;
    std::vector<double> gain_, cost_, prefix_gain_, prefix_cost_;
    std::vector<std::size_t> chosen_;
    SelectionKey best_;
    bool found_ = false;
};

}  // namespace

std::string to_string(Pricing p) { return p == Pricing::future_pci ? "future_pci" : "current_pci"; }

std::string to_string(Method m) {
    switch (m) {
        case Method::optimal: return "optimal";
        case Method::benchmark: return "benchmark";
        case Method::brute_force: return "brute_force";
    }
    return "optimal";
}

double required_effort(const SteppingstoneModel& entry, double rca, double omega, double omega_rel) {
    if (!(entry.b1() > 0.0)) throw ConfigError("entry model has b1 <= 0; the effort inversion is undefined");
    const double r = log_rca(rca);
    const double target_r = (std::log(2.0) - entry.coef[0] - entry.coef[2] * r - entry.coef[3] * omega -
                             entry.coef[4] * omega_rel) / entry.coef[1];
    return std::expm1(target_r) - rca;
}

double predicted_with_effort(const SteppingstoneModel& entry, double rca, double w, double omega, double omega_rel) {
    return entry.predict(log_rca(rca + w), log_rca(rca), omega, omega_rel);
}

EffortMatrix compute_effort(const std::string& focal, const SteppingstoneModel& entry,
                            const SpecializationSnapshot& snapshot, const RelatednessField& relatedness,
                            const FuturePrediction& prediction) {
    return compute_effort(focal, entry, snapshot, relatedness, prediction, prediction.pci_future,
                          Pricing::future_pci);
}

EffortMatrix compute_effort(const std::string& focal, const SteppingstoneModel& entry,
                            const SpecializationSnapshot& snapshot, const RelatednessField& relatedness,
                            const FuturePrediction& prediction, const Eigen::VectorXd& pricing_pci,
                            Pricing pricing) {
    if (entry.regime != Regime::entry) throw ConfigError("effort needs the entry model");
    if (!(entry.b1() > 0.0)) throw ConfigError("entry model has b1 <= 0; the effort inversion is undefined");
    if (prediction.locations != snapshot.locations || prediction.activities != snapshot.activities)
        throw DataError("prediction and snapshot cover different locations or activities");
    if (pricing_pci.size() != snapshot.rca.cols()) throw DataError("pricing vector does not match activities");

    EffortMatrix e;
    e.focal = focal;
    e.focal_index = find_location(snapshot.locations, focal);
    e.base_year = snapshot.year;
    e.horizon_year = prediction.horizon_year;
    e.pricing = pricing;
    const Eigen::Index c = e.focal_index;
    for (Eigen::Index p = 0; p < snapshot.rca.cols(); ++p) {
        const auto& id = snapshot.activities[static_cast<std::size_t>(p)];
        const double pci = pricing_pci(p);
        const bool held_now = snapshot.m(c, p) != 0.0;
        const bool predicted = prediction.m_pred(c, p) != 0.0;
        if (predicted) {
            if (std::isnan(pci)) e.unpriced.push_back(id);
            else e.baseline.push_back({p, id, pci});
            continue;
        }
        if (held_now) continue;  // predicted exit; retention is not priced
        if (std::isnan(pci)) {
            e.unpriced.push_back(id);
            continue;
        }
        Candidate cand;
        cand.activity = p;
        cand.id = id;
        cand.pci = pci;
        cand.rca = snapshot.rca(c, p);
        cand.omega = relatedness.omega(c, p);
        cand.omega_rel = relatedness.omega_rel(c, p);
        const double w = required_effort(entry, cand.rca, cand.omega, cand.omega_rel);
        if (w < -kEffortSlack)
            throw DataError("activity " + id + " needs negative effort (" + io::format_double(w) +
                            ") but is not a predicted entrant; models and prediction disagree");
        cand.w = std::max(w, 0.0);
        e.candidates.push_back(std::move(cand));
    }
    if (e.baseline.empty()) {
        e.eci_baseline = kNaN;
    } else {
        e.eci_baseline = achieved_eci(e, {});
    }
    return e;
}

double achieved_eci(const EffortMatrix& effort, std::span<const std::size_t> positions) {
    double sum = 0.0;
    std::size_t count = 0;
    std::size_t b = 0, s = 0;
    const auto& base = effort.baseline;
    while (b < base.size() || s < positions.size()) {
        const bool take_base = s == positions.size() ||
            (b < base.size() && base[b].activity < effort.candidates[positions[s]].activity);
        if (take_base) {
            sum += base[b++].pci;
        } else {
            sum += effort.candidates[positions[s++]].pci;
        }
        ++count;
    }
    if (count == 0) return kNaN;
    return sum / static_cast<double>(count);
}

bool ratio_constraint_holds(std::span<const double> baseline_pci, std::span<const double> selected_pci,
                            double target) {
    double sum = 0.0;
    for (double v : baseline_pci) sum += v;
    for (double v : selected_pci) sum += v;
    const auto n = static_cast<double>(baseline_pci.size() + selected_pci.size());
    return sum / n >= target;
}

bool linear_constraint_holds(std::span<const double> baseline_pci, std::span<const double> selected_pci,
                             double target) {
    double gain = 0.0, deficit = 0.0;
    for (double v : selected_pci) gain += v - target;
    for (double v : baseline_pci) deficit += target - v;
    return gain >= deficit;
}

Portfolio optimize_portfolio(const EffortMatrix& effort, double target_eci) {
    require_baseline(effort);
    if (achieved_eci(effort, {}) >= target_eci) return make_portfolio(effort, target_eci, {}, Method::optimal, true);

    // Candidates no more complex than the target cannot help a covering
    // constraint and have nonnegative cost.
    std::vector<std::size_t> pool;
    for (std::size_t i = 0; i < effort.candidates.size(); ++i)
        if (effort.candidates[i].pci > target_eci) pool.push_back(i);

    CoverSearch search(effort, target_eci, pool);
    SelectionKey best;
    if (!search.run(best)) {
        Portfolio p = make_portfolio(effort, target_eci, max_eci_selection(effort), Method::optimal, true);
        p.feasible = false;
        return p;
    }
    return make_portfolio(effort, target_eci, std::move(best.positions), Method::optimal, true);
}

Portfolio brute_force_portfolio(const EffortMatrix& effort, double target_eci) {
    require_baseline(effort);
    const std::size_t n = effort.candidates.size();
    if (n > kBruteForceCap)
        throw ConfigError("brute force is capped at " + std::to_string(kBruteForceCap) + " candidates, got " +
                          std::to_string(n));

    SelectionKey best_feasible;
    bool any_feasible = false;
    // Fallback when nothing is feasible: highest ECI, then the usual key.
    double best_eci = -std::numeric_limits<double>::infinity();
    SelectionKey best_fallback;

    std::vector<std::size_t> positions;
    positions.reserve(n);
    const std::uint64_t total = std::uint64_t{1} << n;
    for (std::uint64_t mask = 0; mask < total; ++mask) {
        positions.clear();
        for (std::size_t i = 0; i < n; ++i)
            if (mask >> i & 1U) positions.push_back(i);
        const double eci = achieved_eci(effort, positions);
        SelectionKey key{canonical_cost(effort, positions), positions};
        if (eci >= target_eci) {
            if (!any_feasible || key.better_than(best_feasible)) {
                best_feasible = std::move(key);
                any_feasible = true;
            }
        } else if (!any_feasible) {
            if (eci > best_eci || (eci == best_eci && key.better_than(best_fallback))) {
                best_eci = eci;
                best_fallback = std::move(key);
            }
        }
    }
    if (any_feasible) return make_portfolio(effort, target_eci, best_feasible.positions, Method::brute_force, true);
    Portfolio p = make_portfolio(effort, target_eci, best_fallback.positions, Method::brute_force, true);
    p.feasible = false;
    return p;
}

Portfolio benchmark_portfolio(const EffortMatrix& effort, double target_eci) {
    require_baseline(effort);
    const std::size_t n = effort.candidates.size();
    if (n < 2) throw DataError("benchmark needs at least two candidates for min-max normalization");

    double omin = std::numeric_limits<double>::infinity(), omax = -omin, pmin = omin, pmax = -omin;
    for (const auto& c : effort.candidates) {
        omin = std::min(omin, c.omega);
        omax = std::max(omax, c.omega);
        pmin = std::min(pmin, c.pci);
        pmax = std::max(pmax, c.pci);
    }
    const bool omega_flat = !(omax > omin), pci_flat = !(pmax > pmin);
    if (omega_flat && pci_flat)
        throw DataError("benchmark: relatedness and complexity are both constant across candidates");
    std::vector<double> score(n);
    for (std::size_t i = 0; i < n; ++i) {
        const auto& c = effort.candidates[i];
        const double no = omega_flat ? 1.0 : (c.omega - omin) / (omax - omin);
        const double np = pci_flat ? 1.0 : (c.pci - pmin) / (pmax - pmin);
        score[i] = no * np;
    }
    std::vector<std::size_t> rank(n);
    std::iota(rank.begin(), rank.end(), 0);
    std::stable_sort(rank.begin(), rank.end(), [&](std::size_t a, std::size_t b) {
        if (score[a] != score[b]) return score[a] > score[b];
        return effort.candidates[a].id < effort.candidates[b].id;
    });

    std::vector<std::size_t> order, sorted;
    if (achieved_eci(effort, sorted) >= target_eci) return ordered_portfolio(effort, target_eci, order, Method::benchmark);
    for (std::size_t i : rank) {
        order.push_back(i);
        sorted.insert(std::upper_bound(sorted.begin(), sorted.end(), i), i);
        if (achieved_eci(effort, sorted) >= target_eci) break;
    }
    return ordered_portfolio(effort, target_eci, order, Method::benchmark);
}

double added_volume(const Portfolio& portfolio, const SpecializationSnapshot& snapshot) {
    const Eigen::Index c = find_location(snapshot.locations, portfolio.focal);
    const double total = snapshot.output.sum();
    const double xc = snapshot.output.row(c).sum();
    double volume = 0.0;
    for (const auto& s : portfolio.selected) {
        if (s.activity < 0 || s.activity >= snapshot.output.cols() ||
            snapshot.activities[static_cast<std::size_t>(s.activity)] != s.id)
            throw DataError("activity " + s.id + " is not in the snapshot");
        const double xp = snapshot.output.col(s.activity).sum();
        volume += std::max(0.0, xc * xp / total - snapshot.output(c, s.activity));
    }
    return volume;
}

std::string portfolio_csv(const Portfolio& portfolio, const EffortMatrix& effort) {
    std::ostringstream out;
    out << "activity,w,pci_future,cumulative_eci\n";
    std::vector<std::size_t> positions;
    for (const auto& s : portfolio.selected) {
        auto it = std::find_if(effort.candidates.begin(), effort.candidates.end(),
                               [&](const Candidate& c) { return c.activity == s.activity; });
        if (it == effort.candidates.end()) throw DataError("portfolio activity " + s.id + " is not a candidate");
        const auto pos = static_cast<std::size_t>(it - effort.candidates.begin());
        positions.insert(std::upper_bound(positions.begin(), positions.end(), pos), pos);
        out << s.id << ',' << io::format_double(s.w) << ',' << io::format_double(s.pci) << ','
            << io::format_double(achieved_eci(effort, positions)) << '\n';
    }
    return out.str();
}

std::string effort_diagram_csv(const EffortMatrix& effort, const Portfolio& optimal, const Portfolio* benchmark) {
    auto contains = [](const Portfolio* p, Eigen::Index a) {
        if (!p) return false;
        return std::any_of(p->selected.begin(), p->selected.end(), [&](const Selection& s) { return s.activity == a; });
    };
    std::ostringstream out;
    out << "activity,w,pci_future,rca,omega,omega_rel,selected";
    if (benchmark) out << ",benchmark_selected";
    out << '\n';
    for (const auto& c : effort.candidates) {
        out << c.id << ',' << io::format_double(c.w) << ',' << io::format_double(c.pci) << ','
            << io::format_double(c.rca) << ',' << io::format_double(c.omega) << ',' << io::format_double(c.omega_rel)
            << ',' << (contains(&optimal, c.activity) ? 1 : 0);
        if (benchmark) out << ',' << (contains(benchmark, c.activity) ? 1 : 0);
        out << '\n';
    }
    return out.str();
}

}  // namespace ecopt
