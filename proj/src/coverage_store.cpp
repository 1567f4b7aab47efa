#include "ubrl/coverage_store.hpp"

#include "ubrl/decimal.hpp"
#include "ubrl/error.hpp"
#include "ubrl/store_io.hpp"

#include <openssl/sha.h>

#include <fcntl.h>
#include <unistd.h>

#include <cerrno>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <ctime>
#include <fstream>
#include <regex>
#include <sstream>

namespace fs = std::filesystem;

namespace ubrl {

namespace store_io {

void write_all(int fd, std::string_view content, const std::string& what) {
    while (!content.empty()) {
        const ssize_t n = ::write(fd, content.data(), content.size());
        if (n < 0) {
            if (errno == EINTR)
                continue;
            const int err = errno;
            if (err == ENOSPC || err == EDQUOT)
                fail(ErrorKind::StorageFull, "no space left writing " + what);
            fail(ErrorKind::StorageFull, "cannot write " + what + ": " + std::strerror(err));
        }
        content.remove_prefix(static_cast<std::size_t>(n));
    }
}

void write_file_atomic(const fs::path& path, std::string_view content) {
    const fs::path tmp = path.string() + ".tmp";
    const int fd = ::open(tmp.c_str(), O_WRONLY | O_CREAT | O_TRUNC | O_CLOEXEC, 0644);
    if (fd < 0) {
        const int err = errno;
        fail(err == ENOSPC ? ErrorKind::StorageFull : ErrorKind::NotFound,
             "cannot create " + tmp.string() + ": " + std::strerror(err));
    }
    try {
        write_all(fd, content, path.string());
        if (::fsync(fd) != 0 && errno == ENOSPC)
            fail(ErrorKind::StorageFull, "no space left writing " + path.string());
    } catch (...) {
        ::close(fd);
        ::unlink(tmp.c_str());
        throw;
    }
    ::close(fd);
    if (::rename(tmp.c_str(), path.c_str()) != 0) {
        const int err = errno;
        ::unlink(tmp.c_str());
        fail(ErrorKind::StorageFull, "cannot rename into " + path.string() + ": " + std::strerror(err));
    }
}

void append_line(const fs::path& path, std::string_view line) {
    const int fd = ::open(path.c_str(), O_WRONLY | O_CREAT | O_APPEND | O_CLOEXEC, 0644);
    if (fd < 0) {
        const int err = errno;
        fail(err == ENOSPC ? ErrorKind::StorageFull : ErrorKind::NotFound,
             "cannot open " + path.string() + ": " + std::strerror(err));
    }
    try {
        write_all(fd, std::string(line) + "\n", path.string());
    } catch (...) {
        ::close(fd);
        throw;
    }
    ::close(fd);
}

std::string sha256_hex(std::string_view data) {
    unsigned char digest[SHA256_DIGEST_LENGTH];
    SHA256(reinterpret_cast<const unsigned char*>(data.data()), data.size(), digest);
    static const char* hex = "0123456789abcdef";
    std::string out;
    for (unsigned char c : digest) {
        out.push_back(hex[c >> 4]);
        out.push_back(hex[c & 15]);
    }
    return out;
}

} // namespace store_io

namespace {

std::string read_file(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in)
        fail(ErrorKind::NotFound, "cannot read " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

nlohmann::json parse_json(const std::string& text, const fs::path& path) {
    try {
        return nlohmann::json::parse(text);
    } catch (const nlohmann::json::exception& e) {
        fail(ErrorKind::ParseError, "corrupt " + path.string() + ": " + e.what());
    }
}

std::string utc_now() {
    const auto now = std::chrono::system_clock::now();
    const std::time_t secs = std::chrono::system_clock::to_time_t(now);
    const auto millis =
        std::chrono::duration_cast<std::chrono::milliseconds>(now.time_since_epoch()).count() % 1000;
    std::tm tm{};
    gmtime_r(&secs, &tm);
    char buf[40];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%S", &tm);
    char out[48];
    std::snprintf(out, sizeof out, "%s.%03dZ", buf, static_cast<int>(millis));
    return out;
}

} // namespace

nlohmann::json to_json(const SelectionRecord& rec) {
    nlohmann::json j = {{"coverage_set", rec.coverage_set}, {"grid_index", rec.grid_index},
                        {"param", format_decimal(rec.param)},  {"note", rec.note},
                        {"timestamp", rec.timestamp},          {"record_id", rec.record_id}};
    if (rec.idempotency_key)
        j["idempotency_key"] = *rec.idempotency_key;
    return j;
}

SelectionRecord selection_from_json(const nlohmann::json& j) {
    try {
        SelectionRecord rec;
        rec.coverage_set = j.at("coverage_set").get<std::string>();
        rec.grid_index = j.at("grid_index").get<std::size_t>();
        rec.param = json_decimal(j.at("param"));
        rec.note = j.value("note", "");
        rec.timestamp = j.at("timestamp").get<std::string>();
        rec.record_id = j.at("record_id").get<std::string>();
        if (j.contains("idempotency_key"))
            rec.idempotency_key = j.at("idempotency_key").get<std::string>();
        return rec;
    } catch (const nlohmann::json::exception& e) {
        fail(ErrorKind::ParseError, std::string("malformed selection record: ") + e.what());
    }
}

std::size_t nearest_grid_index(const ParameterGrid& grid, double param) {
    if (grid.size() == 0)
        fail(ErrorKind::RangeError, "empty grid");
    if (!std::isfinite(param) || param < grid.lo() || param > grid.hi())
        fail(ErrorKind::RangeError, "parameter " + format_decimal(param) + " outside [" + format_decimal(grid.lo()) +
                                        ", " + format_decimal(grid.hi()) + "]");
    std::size_t best = 0;
    for (std::size_t i = 1; i < grid.size(); ++i)
        if (std::abs(grid.values[i] - param) < std::abs(grid.values[best] - param))
            best = i;
    return best;
}

std::size_t grid_index_of(const ParameterGrid& grid, double param) {
    for (std::size_t i = 0; i < grid.size(); ++i)
        if (grid.values[i] == param)
            return i;
    fail(ErrorKind::OffGrid, "parameter " + format_decimal(param) + " is not a grid point");
}

std::string config_hash(const CoverageSet& set) {
    const auto j = to_json(set);
    const nlohmann::json config = {{"criterion", j["criterion"]}, {"solver", j["solver"]}, {"utility", j["utility"]},
                                   {"grid", j["grid"]},           {"mdp_ref", j["mdp_ref"]}};
    return store_io::sha256_hex(config.dump());
}

bool is_valid_coverage_id(const std::string& id) {
    static const std::regex pattern("^[0-9a-f]{16}-[0-9]{4}$");
    return std::regex_match(id, pattern);
}

CoverageStore::CoverageStore(fs::path root) : root_(std::move(root)) { fs::create_directories(root_ / "runs"); }

fs::path CoverageStore::run_dir(const std::string& id) const {
    if (!is_valid_coverage_id(id))
        fail(ErrorKind::NotFound, "no coverage set '" + id + "'");
    return root_ / "runs" / id;
}

std::mutex& CoverageStore::lock_for(const std::string& id) {
    std::lock_guard guard(locks_mutex_);
    auto& slot = locks_[id];
    if (!slot)
        slot = std::make_unique<std::mutex>();
    return *slot;
}

std::string CoverageStore::save(const CoverageSet& set, const std::optional<Mdp>& mdp) {
    nlohmann::json stored = to_json(set);
    const std::string prefix = store_io::sha256_hex(stored.dump()).substr(0, 16);

    std::lock_guard guard(save_mutex_);
    int seq = 1;
    for (const auto& dir : fs::directory_iterator(root_ / "runs")) {
        const std::string name = dir.path().filename().string();
        if (is_valid_coverage_id(name) && name.compare(0, 16, prefix) == 0)
            seq = std::max(seq, std::stoi(name.substr(17)) + 1);
    }
    if (seq > 9999)
        fail(ErrorKind::Conflict, "sequence numbers exhausted for " + prefix);
    char id_buf[32];
    std::snprintf(id_buf, sizeof id_buf, "%s-%04d", prefix.c_str(), seq);
    const std::string id = id_buf;
    const fs::path dir = root_ / "runs" / id;

    stored["id"] = id;
    stored["created_at"] = utc_now();
    stored["config_hash"] = config_hash(set);

    std::error_code ec;
    if (!fs::create_directory(dir, ec)) {
        if (ec.value() == ENOSPC)
            fail(ErrorKind::StorageFull, "no space left creating " + dir.string());
        fail(ErrorKind::Conflict, "coverage set " + id + " already exists");
    }
    try {
        if (mdp)
            store_io::write_file_atomic(dir / "mdp.json", to_json(*mdp).dump(2) + "\n");
        store_io::write_file_atomic(dir / "coverage.json", stored.dump(2) + "\n");
    } catch (...) {
        fs::remove_all(dir, ec);
        throw;
    }
    return id;
}

nlohmann::json CoverageStore::load_json(const std::string& id) const {
    const fs::path path = run_dir(id) / "coverage.json";
    if (!fs::exists(path))
        fail(ErrorKind::NotFound, "no coverage set '" + id + "'");
    return parse_json(read_file(path), path);
}

CoverageSet CoverageStore::load(const std::string& id) const { return coverage_from_json(load_json(id)); }

std::optional<Mdp> CoverageStore::load_mdp(const std::string& id) const {
    const fs::path path = run_dir(id) / "mdp.json";
    if (!fs::exists(path)) {
        load_json(id); // NotFound for unknown ids
        return std::nullopt;
    }
    return mdp_from_json(parse_json(read_file(path), path));
}

std::vector<std::string> CoverageStore::list() const {
    std::vector<std::string> ids;
    for (const auto& dir : fs::directory_iterator(root_ / "runs")) {
        const std::string name = dir.path().filename().string();
        if (is_valid_coverage_id(name) && fs::exists(dir.path() / "coverage.json"))
            ids.push_back(name);
    }
    std::sort(ids.begin(), ids.end());
    return ids;
}

PolicyQuery CoverageStore::query_policy(const CoverageSet& set, double param) {
    PolicyQuery q;
    q.grid_index = nearest_grid_index(set.grid, param);
    q.param = set.grid.values[q.grid_index];
    q.exact = q.param == param;
    q.entry = &set.entries.at(q.grid_index);
    return q;
}

SelectionRecord CoverageStore::record_selection(const std::string& id, std::size_t grid_index, const std::string& note,
                                                const std::optional<std::string>& idempotency_key) {
    const CoverageSet set = load(id);
    if (grid_index >= set.grid.size())
        fail(ErrorKind::RangeError, "grid index " + std::to_string(grid_index) + " out of range (grid has " +
                                        std::to_string(set.grid.size()) + " points)");

    std::lock_guard guard(lock_for(id));
    const auto existing = list_selections(id);
    if (idempotency_key)
        for (const auto& rec : existing)
            if (rec.idempotency_key == idempotency_key)
                return rec;

    SelectionRecord rec;
    rec.coverage_set = id;
    rec.grid_index = grid_index;
    rec.param = set.grid.values[grid_index];
    rec.note = note;
    rec.timestamp = utc_now();
    char buf[16];
    std::snprintf(buf, sizeof buf, "%06zu", existing.size() + 1);
    rec.record_id = id + "-sel-" + buf;
    rec.idempotency_key = idempotency_key;
    store_io::append_line(run_dir(id) / "selections.jsonl", to_json(rec).dump());
    return rec;
}

std::vector<SelectionRecord> CoverageStore::list_selections(const std::string& id) const {
    const fs::path dir = run_dir(id);
    if (!fs::exists(dir / "coverage.json"))
        fail(ErrorKind::NotFound, "no coverage set '" + id + "'");
    std::vector<SelectionRecord> out;
    std::ifstream in(dir / "selections.jsonl");
    std::string line;
    while (std::getline(in, line)) {
        // A torn final line from a crash mid-append is skipped.
        if (line.empty())
            continue;
        try {
            out.push_back(selection_from_json(nlohmann::json::parse(line)));
        } catch (const std::exception&) {
            continue;
        }
    }
    return out;
}

} // namespace ubrl
