#pragma once

// On-disk store of coverage sets and user selections.
//
//   <root>/runs/<id>/coverage.json     the set, written once
//   <root>/runs/<id>/mdp.json          the MDP it was solved on
//   <root>/runs/<id>/selections.jsonl  one selection record per line
//
// Ids are the first 16 hex digits of the SHA-256 of the canonical coverage
// JSON followed by a 4-digit sequence number, so saving identical content
// twice yields two ids sharing a prefix.

#include "ubrl/coverage.hpp"
#include "ubrl/mdp.hpp"

#include <json.hpp>

#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

namespace ubrl {

struct SelectionRecord {
    std::string coverage_set;
    std::size_t grid_index = 0;
    double param = 0.0;
    std::string note;
    std::string timestamp; ///< UTC, ISO 8601
    std::string record_id;
    std::optional<std::string> idempotency_key;
};

nlohmann::json to_json(const SelectionRecord& rec);
SelectionRecord selection_from_json(const nlohmann::json& j);

struct PolicyQuery {
    std::size_t grid_index = 0;
    double param = 0.0; ///< the grid point actually used
    bool exact = true;  ///< false when the requested value was off-grid
    const CoverageEntry* entry = nullptr;
};

/// Grid index nearest to `param` (ties to the lower index). Throws
/// RangeError outside [lo, hi].
std::size_t nearest_grid_index(const ParameterGrid& grid, double param);

/// Index of the grid point equal to `param`; OffGrid when there is none.
std::size_t grid_index_of(const ParameterGrid& grid, double param);

/// Hash of the solver configuration (criterion, solver, utility, grid,
/// mdp_ref). Object keys are sorted before hashing.
std::string config_hash(const CoverageSet& set);

/// True for ids of the form <16 hex>-<4 digits>.
bool is_valid_coverage_id(const std::string& id);

class CoverageStore {
public:
    explicit CoverageStore(std::filesystem::path root);

    const std::filesystem::path& root() const { return root_; }

    /// Writes a new run and returns its id. The stored JSON is the set's
    /// own plus id, created_at and config_hash. Throws StorageFull when the disk
    /// is full and Conflict if the id is already taken.
    std::string save(const CoverageSet& set, const std::optional<Mdp>& mdp = std::nullopt);

    /// Throws NotFound for unknown ids.
    CoverageSet load(const std::string& id) const;
    std::optional<Mdp> load_mdp(const std::string& id) const;
    nlohmann::json load_json(const std::string& id) const;
    std::vector<std::string> list() const;

    /// Entry for `param`. Off-grid values inside the range return the nearest
    /// point with exact = false; values outside it throw RangeError.
    static PolicyQuery query_policy(const CoverageSet& set, double param);

    /// Appends a selection. A repeated idempotency key returns the record
    /// stored the first time instead of appending again. Throws NotFound for
    /// unknown sets and RangeError for a bad grid index.
    SelectionRecord record_selection(const std::string& id, std::size_t grid_index, const std::string& note,
                                     const std::optional<std::string>& idempotency_key = std::nullopt);
    std::vector<SelectionRecord> list_selections(const std::string& id) const;

private:
    std::filesystem::path run_dir(const std::string& id) const;
    std::mutex& lock_for(const std::string& id);

    std::filesystem::path root_;
    std::mutex save_mutex_;
    std::mutex locks_mutex_;
    std::map<std::string, std::unique_ptr<std::mutex>> locks_;
};

} // namespace ubrl
