#include "hopfgeom/ode_lemma.hpp"

#include "hopfgeom/error.hpp"
#include "hopfgeom/io.hpp"

#include "json.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <limits>
#include <map>
#include <sstream>

namespace hopf {

namespace {

constexpr const char* kModule = "ode_lemma";

double slack(double tol, double magnitude) { return tol * std::max(1.0, std::abs(magnitude)); }

std::string trend_of(const std::vector<double>& values) {
    int up = 0, down = 0;
    for (std::size_t i = 1; i < values.size(); ++i) {
        if (values[i] > values[i - 1] + 1e-12 * std::abs(values[i - 1])) ++up;
        if (values[i] < values[i - 1] - 1e-12 * std::abs(values[i - 1])) ++down;
    }
    return up && down ? "mixed" : up ? "increasing" : down ? "decreasing" : "constant";
}

void check_monotone(const std::vector<double>& x, const std::vector<double>& y, const char* name) {
    for (std::size_t i = 1; i < y.size(); ++i) {
        if (y[i] < y[i - 1] - 1e-12 * std::max(1.0, std::abs(y[i - 1])))
            throw InvariantError(kModule, std::string(name) + " decreases on [" + num(x[i - 1]) + ", " + num(x[i]) + "]");
    }
}

}  // namespace

PiecewiseLinear::PiecewiseLinear(std::vector<double> x, std::vector<double> y) : x_(std::move(x)), y_(std::move(y)) {
    if (x_.size() < 2 || x_.size() != y_.size()) throw DomainError(kModule, "need at least two samples of equal length");
    for (std::size_t i = 1; i < x_.size(); ++i)
        if (!(x_[i] > x_[i - 1])) throw DomainError(kModule, "grid must be strictly increasing");
}

double PiecewiseLinear::operator()(double t) const {
    if (t <= x_.front()) return y_.front();
    if (t >= x_.back()) return y_.back();
    const auto it = std::upper_bound(x_.begin(), x_.end(), t);
    const std::size_t i = static_cast<std::size_t>(it - x_.begin()) - 1;
    const double w = (t - x_[i]) / (x_[i + 1] - x_[i]);
    return (1.0 - w) * y_[i] + w * y_[i + 1];
}

double PiecewiseLinear::slope(std::size_t cell) const { return (y_[cell + 1] - y_[cell]) / (x_[cell + 1] - x_[cell]); }

std::vector<double> PiecewiseLinear::breakpoints(double q, double r) const {
    std::vector<double> pts{q};
    for (double x : x_)
        if (x > q && x < r) pts.push_back(x);
    pts.push_back(r);
    return pts;
}

IteratedIntegral nested_and_weighted(const PiecewiseLinear& f, double q, double r) {
    if (!(q < r)) throw DomainError(kModule, "need q < r");
    const auto pts = f.breakpoints(q, r);
    IteratedIntegral out;
    double C = 0.0;  // int_q^x f
    for (std::size_t i = 0; i + 1 < pts.size(); ++i) {
        const double x0 = pts[i], x1 = pts[i + 1], h = x1 - x0, xm = 0.5 * (x0 + x1);
        const double f0 = f(x0), f1 = f(x1), fm = 0.5 * (f0 + f1);
        // f is linear and C quadratic on the segment: Simpson is exact.
        const double Cm = C + 0.5 * h * 0.5 * (f0 + fm);
        const double C1 = C + h * fm;
        out.nested += h / 6.0 * (C + 4.0 * Cm + C1);
        out.weighted += h / 6.0 * ((r - x0) * f0 + 4.0 * (r - xm) * fm + (r - x1) * f1);
        C = C1;
    }
    return out;
}

IteratedIntegral iterated_integral(const PiecewiseLinear& F, double q, double r) {
    if (!(q < r)) throw DomainError(kModule, "iterated integral needs q < r");
    const double Fq = F(q);
    std::vector<double> shifted = F.y();
    for (auto& y : shifted) y -= Fq;
    const IteratedIntegral out = nested_and_weighted(PiecewiseLinear(F.x(), shifted), q, r);
    const double scale = std::max({std::abs(out.nested), std::abs(out.weighted), 1e-300});
    if (std::abs(out.nested - out.weighted) > 1e-10 * scale + 1e-15 * (r - q) * (r - q) * std::abs(Fq))
        throw InvariantError(kModule, "iterated integral forms disagree: " + num(out.nested) + " vs " + num(out.weighted));
    return out;
}

CauchySchwarzStep check_cauchy_schwarz_step(const PiecewiseLinear& F, const PiecewiseLinear& A, double q, double r) {
    if (!(q < r)) throw DomainError(kModule, "need q < r");
    if (F.x() != A.x()) throw DomainError(kModule, "F and A must share the grid");
    const auto& x = F.x();
    CauchySchwarzStep res;
    const auto pts = F.breakpoints(q, r);
    for (std::size_t i = 0; i + 1 < pts.size(); ++i) {
        const double x0 = pts[i], x1 = pts[i + 1];
        const double xm = 0.5 * (x0 + x1);
        double root = 0.0;
        if (xm > x.front() && xm < x.back()) {
            const std::size_t cell = static_cast<std::size_t>(std::upper_bound(x.begin(), x.end(), xm) - x.begin()) - 1;
            double fs = F.slope(cell), as = A.slope(cell);
            const double tiny = 1e-12 / (x[cell + 1] - x[cell]);
            if (fs < -tiny * std::max(1.0, std::abs(F.y()[cell])) || as < -tiny * std::max(1.0, std::abs(A.y()[cell])))
                throw InvariantError(kModule, "negative slope on [" + num(x[cell]) + ", " + num(x[cell + 1]) + "]");
            root = std::sqrt(std::max(0.0, fs) * std::max(0.0, as));
        }
        res.lhs += root * 0.5 * ((r - x0) * (r - x0) - (r - x1) * (r - x1));
    }
    const double I = iterated_integral(F, q, r).nested;
    res.rhs = std::sqrt(std::max(0.0, 2.0 * I * A(r)));
    res.margin = res.rhs - res.lhs;
    return res;
}

double check_hypothesis(const PiecewiseLinear& A, const PiecewiseLinear& R) {
    if (A.x() != R.x()) throw DomainError(kModule, "A and R must share the grid");
    const auto& x = A.x();
    double C = 0.0, D = 0.0;
    double prev = 0.0;
    double defect = -std::numeric_limits<double>::infinity();
    auto advance = [&](double x1) {
        const double h = x1 - prev;
        if (h <= 0.0) return;
        const double f0 = R(prev), f1 = R(x1), fm = 0.5 * (f0 + f1);
        const double Cm = C + 0.5 * h * 0.5 * (f0 + fm);
        const double C1 = C + h * fm;
        D += h / 6.0 * (C + 4.0 * Cm + C1);
        C = C1;
        prev = x1;
    };
    for (std::size_t k = 0; k < x.size(); ++k) {
        advance(x[k]);
        if (x[k] > 0.0) defect = std::max(defect, D - A.y()[k]);
    }
    return defect;
}

void OdeLemmaData::validate() const {
    const std::size_t m = r.size();
    if (m < 2 || A.size() != m || F.size() != m || R.size() != m)
        throw InvariantError(kModule, "r, A, F, R must have the same length (at least 2)");
    for (std::size_t i = 0; i < m; ++i) {
        if (!std::isfinite(r[i]) || !std::isfinite(A[i]) || !std::isfinite(F[i]) || !std::isfinite(R[i]))
            throw InvariantError(kModule, "non-finite sample at row " + std::to_string(i + 1));
        if (r[i] < 0.0) throw InvariantError(kModule, "grid must lie in [0, inf)");
        if (i > 0 && !(r[i] > r[i - 1])) throw InvariantError(kModule, "grid must be strictly increasing");
        if (A[i] < 0.0 || F[i] < 0.0) throw InvariantError(kModule, "A and F must be nonnegative");
    }
    check_monotone(r, A, "A");
    check_monotone(r, F, "F");
    if (!(a > 0.0) || !(b > 0.0)) throw InvariantError(kModule, "a and b must be positive");
}

OdeLemmaData parse_lemma_csv(std::string_view text, double a, double b, double c) {
    std::istringstream in{std::string(text)};
    std::string line;
    int line_no = 0;
    std::map<std::string, std::size_t> col;
    std::vector<std::vector<double>> rows;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        std::vector<std::string> cells;
        std::stringstream ls(line);
        std::string cell;
        while (std::getline(ls, cell, ',')) cells.push_back(cell);
        if (col.empty()) {
            for (std::size_t i = 0; i < cells.size(); ++i) col[cells[i]] = i;
            for (const char* name : {"r", "A", "F", "R"})
                if (!col.count(name)) throw ParseError(std::string("missing column '") + name + "'", line_no, 1);
            continue;
        }
        if (cells.size() != col.size()) throw ParseError("wrong number of fields", line_no, 1);
        std::vector<double> row(cells.size());
        int column = 1;
        for (std::size_t i = 0; i < cells.size(); ++i) {
            char* end = nullptr;
            row[i] = std::strtod(cells[i].c_str(), &end);
            if (cells[i].empty() || *end != '\0') throw ParseError("not a number: '" + cells[i] + "'", line_no, column);
            column += static_cast<int>(cells[i].size()) + 1;
        }
        rows.push_back(std::move(row));
    }
    if (col.empty()) throw ParseError("empty input", 1, 1);
    OdeLemmaData d;
    for (const auto& row : rows) {
        d.r.push_back(row[col["r"]]);
        d.A.push_back(row[col["A"]]);
        d.F.push_back(row[col["F"]]);
        d.R.push_back(row[col["R"]]);
    }
    d.a = a;
    d.b = b;
    d.c = c;
    return d;
}

OdeLemmaData load_lemma_csv(const std::filesystem::path& path, double a, double b, double c) {
    std::ifstream f(path);
    if (!f) throw DomainError(kModule, "cannot open " + path.string());
    std::stringstream ss;
    ss << f.rdbuf();
    return parse_lemma_csv(ss.str(), a, b, c);
}

LemmaVerdict sharp_bound(const OdeLemmaData& d, const LemmaOptions& options) {
    d.validate();
    if (!(options.tail > 0.0 && options.tail < 1.0)) throw DomainError(kModule, "tail must be in (0, 1)");
    const PiecewiseLinear A(d.r, d.A), F(d.r, d.F), R(d.r, d.R);
    LemmaVerdict v;

    v.hypothesis_defect = check_hypothesis(A, R);
    v.hypothesis_ok = v.hypothesis_defect <= slack(options.tol, d.A.back());

    // The inequality is linear in t on each open cell, so checking both cell
    // ends covers the cell.
    v.inequality_min_margin = std::numeric_limits<double>::infinity();
    v.inequality_ok = true;
    for (std::size_t i = 0; i + 1 < d.r.size(); ++i) {
        const double root = d.b * std::sqrt(std::max(0.0, F.slope(i)) * std::max(0.0, A.slope(i)));
        for (std::size_t k : {i, i + 1}) {
            const double rhs = d.a * d.R[k] + root + d.c;
            const double m = rhs - d.F[k];
            v.inequality_min_margin = std::min(v.inequality_min_margin, m);
            if (m < -slack(options.tol, std::max(std::abs(rhs), d.F[k]))) v.inequality_ok = false;
        }
    }

    v.sup_F = *std::max_element(d.F.begin(), d.F.end());
    v.window_hi = d.r.back();
    v.window_lo = options.tail * v.window_hi;
    std::vector<double> ratios;
    v.liminf_ratio = std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k < d.r.size(); ++k) {
        if (d.r[k] < v.window_lo || d.r[k] <= 0.0) continue;
        const double q = d.A[k] / (d.r[k] * d.r[k]);
        ratios.push_back(q);
        v.liminf_ratio = std::min(v.liminf_ratio, q);
    }
    if (ratios.empty()) throw DomainError(kModule, "tail window contains no grid point");
    v.tail_trend = trend_of(ratios);
    v.bound_is_lower_estimate = v.tail_trend == "increasing";
    // A ratio that still doubles across the window is read as unbounded.
    v.diverging = v.bound_is_lower_estimate && ratios.back() >= options.divergence_factor * ratios.front();
    v.bound = 2.0 * d.a * v.liminf_ratio + d.c;
    v.margin = v.bound - v.sup_F;
    v.bound_display = (v.bound_is_lower_estimate ? "> " : "") + num(v.bound);

    if (!v.hypothesis_ok) {
        v.status = "precondition-failed";
        v.detail = "hypothesis defect " + num(v.hypothesis_defect);
    } else if (!v.inequality_ok) {
        v.status = "precondition-failed";
        v.detail = "differential inequality violated, min margin " + num(v.inequality_min_margin);
    } else if (v.margin >= -slack(options.tol, std::max(std::abs(v.bound), v.sup_F))) {
        v.status = "pass";
    } else if (v.diverging) {
        v.status = "pass";
        v.detail = "A/r^2 diverges across the window; sup F on the grid is finite";
    } else if (v.bound_is_lower_estimate) {
        v.status = "inconclusive";
        v.detail = "window bound is a lower estimate below sup F";
    } else {
        v.status = "fail";
    }
    return v;
}

std::string LemmaVerdict::to_json() const {
    nlohmann::ordered_json j;
    j["sup_F"] = sup_F;
    j["liminf_ratio"] = liminf_ratio;
    j["window"] = {window_lo, window_hi};
    j["tail_trend"] = tail_trend;
    j["bound"] = bound;
    j["bound_display"] = bound_display;
    j["bound_is_lower_estimate"] = bound_is_lower_estimate;
    j["diverging"] = diverging;
    j["margin"] = margin;
    j["hypothesis_defect"] = hypothesis_defect;
    j["hypothesis_ok"] = hypothesis_ok;
    j["inequality_min_margin"] = inequality_min_margin;
    j["inequality_ok"] = inequality_ok;
    j["status"] = status;
    j["detail"] = detail;
    return j.dump(2);
}

}  // namespace hopf
