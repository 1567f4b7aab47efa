#include "ubrl/distribution.hpp"

#include "ubrl/decimal.hpp"
#include "ubrl/error.hpp"

#include <algorithm>
#include <cmath>

namespace ubrl {

ReturnDistribution ReturnDistribution::from_atoms(std::vector<Atom> atoms) {
    std::erase_if(atoms, [](const Atom& a) { return !(a.prob > 0.0); });
    if (atoms.empty())
        fail(ErrorKind::EmptyDistribution, "distribution has no atoms with positive probability");
    for (const Atom& a : atoms)
        if (!std::isfinite(a.value) || !std::isfinite(a.prob))
            fail(ErrorKind::EmptyDistribution, "distribution has non-finite atoms");
    std::stable_sort(atoms.begin(), atoms.end(), [](const Atom& x, const Atom& y) { return x.value < y.value; });

    ReturnDistribution dist;
    double total = 0.0;
    for (const Atom& a : atoms) {
        total += a.prob;
        if (!dist.atoms_.empty() && a.value - dist.atoms_.back().value <= merge_tolerance)
            dist.atoms_.back().prob += a.prob;
        else
            dist.atoms_.push_back(a);
    }
    if (std::abs(total - 1.0) > mass_tolerance)
        fail(ErrorKind::EmptyDistribution, "distribution mass is " + format_decimal(total) + ", expected 1");
    return dist;
}

double ReturnDistribution::mean() const {
    double m = 0.0;
    for (const Atom& a : atoms_)
        m += a.prob * a.value;
    return m;
}

double ReturnDistribution::min() const {
    if (atoms_.empty())
        fail(ErrorKind::EmptyDistribution, "empty distribution");
    return atoms_.front().value;
}

double ReturnDistribution::max() const {
    if (atoms_.empty())
        fail(ErrorKind::EmptyDistribution, "empty distribution");
    return atoms_.back().value;
}

double ReturnDistribution::cdf(double z) const {
    double f = 0.0;
    for (const Atom& a : atoms_) {
        if (a.value > z)
            break;
        f += a.prob;
    }
    return f;
}

double total_variation(const ReturnDistribution& a, const ReturnDistribution& b, double tol) {
    const auto& xs = a.atoms();
    const auto& ys = b.atoms();
    std::size_t i = 0, j = 0;
    double l1 = 0.0;
    while (i < xs.size() || j < ys.size()) {
        if (j == ys.size() || (i < xs.size() && xs[i].value < ys[j].value - tol)) {
            l1 += xs[i++].prob;
        } else if (i == xs.size() || ys[j].value < xs[i].value - tol) {
            l1 += ys[j++].prob;
        } else {
            l1 += std::abs(xs[i++].prob - ys[j++].prob);
        }
    }
    return 0.5 * l1;
}

nlohmann::json to_json(const ReturnDistribution& dist) {
    auto arr = nlohmann::json::array();
    for (const Atom& a : dist.atoms())
        arr.push_back({{"value", format_decimal(a.value)}, {"prob", format_decimal(a.prob)}});
    return arr;
}

ReturnDistribution distribution_from_json(const nlohmann::json& j) {
    std::vector<Atom> atoms;
    for (const auto& a : j)
        atoms.push_back({json_decimal(a.at("value")), json_decimal(a.at("prob"))});
    return ReturnDistribution::from_atoms(std::move(atoms));
}

} // namespace ubrl
