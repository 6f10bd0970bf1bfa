#pragma once

#include <string>
#include <utility>
#include <vector>

#include "macdmt/rational.hpp"

#include <json.hpp>

namespace macdmt {

/// Piecewise-linear curve stored as sorted breakpoints (r, d).
///
/// Invariants: r strictly increasing, d non-increasing. Evaluation between
/// breakpoints is linear interpolation; beyond the last breakpoint the curve
/// is 0 (DMT curves end at d = 0). Evaluation left of the first breakpoint is
/// rejected; DMT curves always start at r = 0.
class PiecewiseLinearCurve {
public:
    using Point = std::pair<Rational, Rational>;

    PiecewiseLinearCurve() = default;
    explicit PiecewiseLinearCurve(std::vector<Point> pts) : pts_(std::move(pts)) { validate(); }

    const std::vector<Point>& breakpoints() const { return pts_; }
    bool empty() const { return pts_.empty(); }

    Rational r_min() const { return pts_.front().first; }
    Rational r_max() const { return pts_.back().first; }

    /// Exact evaluation at r.
    Rational eval(const Rational& r) const;

    /// Appends a breakpoint, dropping it if collinear with the previous
    /// segment (keeps the breakpoint list minimal).
    void append(const Rational& r, const Rational& d);

    /// True iff successive slopes are non-decreasing.
    bool is_convex() const;

    /// {"breakpoints": [[num,den,num,den], ...]}
    nlohmann::json to_json() const;
    static PiecewiseLinearCurve from_json(const nlohmann::json& j);

    /// CSV rows "r,d" sampled on a grid of the given step over [r_min, r_max].
    std::string to_csv(const Rational& grid_step) const;

    friend bool operator==(const PiecewiseLinearCurve& a, const PiecewiseLinearCurve& b) {
        return a.pts_ == b.pts_;
    }

private:
    void validate() const;

    std::vector<Point> pts_;
};

}  // namespace macdmt
