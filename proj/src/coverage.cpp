#include "ubrl/coverage.hpp"

#include "ubrl/decimal.hpp"
#include "ubrl/error.hpp"

#include <atomic>
#include <exception>
#include <thread>

namespace ubrl {

std::size_t CoverageSet::distinct_policy_count() const {
    std::vector<const Policy*> seen;
    for (const auto& e : entries) {
        bool known = false;
        for (const Policy* p : seen)
            known = known || p->same_actions(e.policy);
        if (!known)
            seen.push_back(&e.policy);
    }
    return seen.size();
}

std::vector<std::size_t> CoverageSet::switch_indices() const {
    std::vector<std::size_t> out;
    for (std::size_t i = 1; i < entries.size(); ++i)
        if (!entries[i].policy.same_actions(entries[i - 1].policy))
            out.push_back(i);
    return out;
}

std::string_view solver_name(SolverKind kind) {
    switch (kind) {
    case SolverKind::Exact: return "exact";
    case SolverKind::AugmentedVI: return "augmented-vi";
    case SolverKind::PerGammaVI: return "per-gamma-vi";
    }
    return "exact";
}

SolverKind parse_solver(std::string_view name) {
    for (auto k : {SolverKind::Exact, SolverKind::AugmentedVI, SolverKind::PerGammaVI})
        if (solver_name(k) == name)
            return k;
    fail(ErrorKind::ParseError, "unknown solver '" + std::string(name) + "'");
}

void mark_duplicates(CoverageSet& set) {
    for (std::size_t i = 0; i < set.entries.size(); ++i) {
        set.entries[i].duplicate_of.reset();
        if (i > 0 && set.entries[i].policy.same_actions(set.entries[i - 1].policy))
            set.entries[i].duplicate_of = set.entries[i - 1].duplicate_of.value_or(i - 1);
    }
}

CoverageEntry make_entry(const Mdp& mdp, double param, const Policy& policy, const UtilitySpec& spec,
                         Criterion criterion, const EnumerationLimits& limits) {
    CoverageEntry entry;
    entry.param = param;
    entry.policy = restrict_to_reachable(mdp, policy);
    entry.policy.metadata.utility = spec;
    entry.record = evaluate(mdp, entry.policy, spec, criterion, limits);
    return entry;
}

namespace {

CoverageEntry solve_point(const Mdp& mdp, const UtilitySpec& spec, double param, Criterion criterion,
                          SolverKind solver, const EnumerationLimits& limits) {
    switch (solver) {
    case SolverKind::Exact: {
        auto res = enumerate_policies(mdp, spec, criterion, limits, false);
        return make_entry(mdp, param, res.best, spec, criterion, limits);
    }
    case SolverKind::AugmentedVI: {
        if (criterion != Criterion::ESR)
            fail(ErrorKind::WrongFamily, "augmented value iteration optimises the ESR criterion only");
        auto sol = augmented_value_iteration(mdp, spec, 0.0, limits);
        return make_entry(mdp, param, sol.policy, spec, criterion, limits);
    }
    case SolverKind::PerGammaVI: {
        std::optional<double> gamma;
        if (const auto* d = std::get_if<utility::Discount>(&spec))
            gamma = d->gamma;
        else if (family_of(spec) != UtilityFamily::Identity)
            fail(ErrorKind::WrongFamily, "per-gamma value iteration needs a discount or identity utility");
        auto vi = value_iteration(mdp, gamma);
        return make_entry(mdp, param, vi.policy, spec, criterion, limits);
    }
    }
    fail(ErrorKind::InvalidParams, "unknown solver");
}

} // namespace

CoverageSet solve_coverage_set(const Mdp& mdp, const ParameterGrid& grid, Criterion criterion, SolverKind solver,
                               const CoverageOptions& options) {
    require_valid(mdp);
    check_criterion(grid.base, criterion);

    CoverageSet set;
    set.criterion = criterion;
    set.solver = std::string(solver_name(solver));
    set.grid = grid;
    set.entries.resize(grid.size());

    std::vector<std::exception_ptr> errors(grid.size());
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (std::size_t i = next++; i < grid.size(); i = next++) {
            try {
                set.entries[i] = solve_point(mdp, grid.point(i), grid.values[i], criterion, solver, options.limits);
            } catch (...) {
                errors[i] = std::current_exception();
            }
        }
    };
    const unsigned threads = std::max(1u, std::min<unsigned>(options.threads, static_cast<unsigned>(grid.size())));
    if (threads == 1) {
        worker();
    } else {
        std::vector<std::jthread> pool;
        for (unsigned t = 0; t < threads; ++t)
            pool.emplace_back(worker);
    }

    for (std::size_t i = 0; i < errors.size(); ++i) {
        if (!errors[i])
            continue;
        try {
            std::rethrow_exception(errors[i]);
        } catch (const Error& e) {
            fail(e.kind(), std::string(e.what()) + " [grid point " + std::to_string(i) + ", param " +
                               format_decimal(grid.values[i]) + "]");
        }
    }
    for (auto& e : set.entries)
        e.policy.metadata.solver = set.solver;
    mark_duplicates(set);
    return set;
}

nlohmann::json to_json(const EvaluationRecord& rec) {
    nlohmann::json j = {{"criterion", std::string(criterion_name(rec.criterion))},
                        {"utility", to_json(rec.utility)},
                        {"value", format_decimal(rec.value)},
                        {"expected_return", format_decimal(rec.expected_return)}};
    if (rec.distribution)
        j["distribution"] = to_json(*rec.distribution);
    return j;
}

nlohmann::json to_json(const CoverageSet& set) {
    auto grid = nlohmann::json::array();
    for (double v : set.grid.values)
        grid.push_back(format_decimal(v));
    auto entries = nlohmann::json::array();
    for (const auto& e : set.entries) {
        nlohmann::json j = {{"param", format_decimal(e.param)},
                            {"policy", to_json(e.policy)},
                            {"value", format_decimal(e.record.value)},
                            {"expected_return", format_decimal(e.record.expected_return)}};
        if (e.record.distribution)
            j["distribution"] = to_json(*e.record.distribution);
        if (e.duplicate_of)
            j["duplicate_of"] = *e.duplicate_of;
        entries.push_back(std::move(j));
    }
    return {{"mdp_ref", set.mdp_ref},
            {"criterion", std::string(criterion_name(set.criterion))},
            {"solver", set.solver},
            {"utility", to_json(set.grid.base)},
            {"grid", std::move(grid)},
            {"entries", std::move(entries)}};
}

CoverageSet coverage_from_json(const nlohmann::json& j) {
    try {
        CoverageSet set;
        set.mdp_ref = j.value("mdp_ref", nlohmann::json::object());
        set.criterion = parse_criterion(j.at("criterion").get<std::string>());
        set.solver = j.value("solver", "");
        set.grid.base = utility_from_json(j.at("utility"));
        for (const auto& v : j.at("grid"))
            set.grid.values.push_back(json_decimal(v));
        for (const auto& e : j.at("entries")) {
            CoverageEntry entry;
            entry.param = json_decimal(e.at("param"));
            entry.policy = policy_from_json(e.at("policy"));
            entry.record.criterion = set.criterion;
            entry.record.utility = with_parameter(set.grid.base, entry.param);
            entry.record.value = json_decimal(e.at("value"));
            entry.record.expected_return = json_decimal(e.at("expected_return"));
            if (e.contains("distribution"))
                entry.record.distribution = distribution_from_json(e.at("distribution"));
            if (e.contains("duplicate_of"))
                entry.duplicate_of = e.at("duplicate_of").get<std::size_t>();
            set.entries.push_back(std::move(entry));
        }
        if (set.entries.size() != set.grid.values.size())
            fail(ErrorKind::ParseError, "coverage set has " + std::to_string(set.entries.size()) + " entries for " +
                                            std::to_string(set.grid.values.size()) + " grid points");
        return set;
    } catch (const nlohmann::json::exception& e) {
        fail(ErrorKind::ParseError, std::string("malformed coverage JSON: ") + e.what());
    }
}

} // namespace ubrl
