#include "macdmt/curve.hpp"

#include <sstream>
#include <stdexcept>

namespace macdmt {

Rational PiecewiseLinearCurve::eval(const Rational& r) const {
    if (pts_.empty()) throw std::logic_error("eval on empty curve");
    if (r < pts_.front().first)
        throw std::domain_error("eval left of first breakpoint");
    if (r >= pts_.back().first) {
        if (r == pts_.back().first) return pts_.back().second;
        return Rational(0);
    }
    for (size_t i = 0; i + 1 < pts_.size(); ++i) {
        const auto& [r0, d0] = pts_[i];
        const auto& [r1, d1] = pts_[i + 1];
        if (r >= r0 && r <= r1) {
            if (r == r0) return d0;
            if (r == r1) return d1;
            return d0 + (d1 - d0) * (r - r0) / (r1 - r0);
        }
    }
    throw std::logic_error("eval: unreachable");
}

void PiecewiseLinearCurve::append(const Rational& r, const Rational& d) {
    if (!pts_.empty()) {
        if (r < pts_.back().first) throw std::invalid_argument("breakpoints must increase");
        if (r == pts_.back().first) {
            if (d != pts_.back().second)
                throw std::invalid_argument("conflicting breakpoint values");
            return;
        }
        if (d > pts_.back().second) throw std::invalid_argument("d must be non-increasing");
        if (pts_.size() >= 2) {
            // Collinear with the previous segment: extend it instead.
            const auto& [ra, da] = pts_[pts_.size() - 2];
            const auto& [rb, db] = pts_.back();
            if ((db - da) * (r - rb) == (d - db) * (rb - ra)) {
                pts_.back() = {r, d};
                return;
            }
        }
    }
    pts_.emplace_back(r, d);
}

bool PiecewiseLinearCurve::is_convex() const {
    for (size_t i = 0; i + 2 < pts_.size(); ++i) {
        Rational s0 = (pts_[i + 1].second - pts_[i].second) / (pts_[i + 1].first - pts_[i].first);
        Rational s1 =
            (pts_[i + 2].second - pts_[i + 1].second) / (pts_[i + 2].first - pts_[i + 1].first);
        if (s1 < s0) return false;
    }
    return true;
}

void PiecewiseLinearCurve::validate() const {
    for (size_t i = 0; i + 1 < pts_.size(); ++i) {
        if (!(pts_[i].first < pts_[i + 1].first))
            throw std::invalid_argument("breakpoints must strictly increase");
        if (pts_[i + 1].second > pts_[i].second)
            throw std::invalid_argument("d must be non-increasing");
    }
}

nlohmann::json PiecewiseLinearCurve::to_json() const {
    nlohmann::json bps = nlohmann::json::array();
    for (const auto& [r, d] : pts_)
        bps.push_back({r.num(), r.den(), d.num(), d.den()});
    return {{"breakpoints", bps}};
}

PiecewiseLinearCurve PiecewiseLinearCurve::from_json(const nlohmann::json& j) {
    std::vector<Point> pts;
    for (const auto& bp : j.at("breakpoints")) {
        pts.emplace_back(Rational(bp.at(0).get<long long>(), bp.at(1).get<long long>()),
                         Rational(bp.at(2).get<long long>(), bp.at(3).get<long long>()));
    }
    return PiecewiseLinearCurve(std::move(pts));
}

std::string PiecewiseLinearCurve::to_csv(const Rational& grid_step) const {
    if (grid_step <= Rational(0)) throw std::invalid_argument("grid step must be positive");
    std::ostringstream out;
    out << "r,d\n";
    Rational r = r_min();
    while (r < r_max()) {
        out << r.to_double() << "," << eval(r).to_double() << "\n";
        r += grid_step;
    }
    out << r_max().to_double() << "," << eval(r_max()).to_double() << "\n";
    return out.str();
}

}  // namespace macdmt
