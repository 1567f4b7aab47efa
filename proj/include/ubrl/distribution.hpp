#pragma once

#include <json.hpp>

#include <vector>

namespace ubrl {

struct Atom {
    double value = 0.0;
    double prob = 0.0;

    friend bool operator==(const Atom&, const Atom&) = default;
};

/**
 * Finite categorical distribution over scalar returns.
 *
 * Atoms are kept sorted by value with strictly positive probabilities;
 * values closer than merge_tolerance to the previous atom are merged into it.
 */
class ReturnDistribution {
public:
    static constexpr double merge_tolerance = 1e-12;
    static constexpr double mass_tolerance = 1e-9;

    ReturnDistribution() = default;

    /// Sorts, drops zero-probability atoms and merges near-equal values.
    /// Throws EmptyDistribution if nothing is left or the mass is not 1.
    static ReturnDistribution from_atoms(std::vector<Atom> atoms);

    static ReturnDistribution point(double value) { return from_atoms({{value, 1.0}}); }

    const std::vector<Atom>& atoms() const { return atoms_; }
    bool empty() const { return atoms_.empty(); }
    std::size_t size() const { return atoms_.size(); }

    double mean() const;
    double min() const;
    double max() const;
    /// P(Z <= z)
    double cdf(double z) const;

    friend bool operator==(const ReturnDistribution&, const ReturnDistribution&) = default;

private:
    std::vector<Atom> atoms_;
};

/// Half the L1 distance, matching atoms whose values agree within `tol`.
double total_variation(const ReturnDistribution& a, const ReturnDistribution& b, double tol = 1e-9);

nlohmann::json to_json(const ReturnDistribution& dist);
ReturnDistribution distribution_from_json(const nlohmann::json& j);

} // namespace ubrl
