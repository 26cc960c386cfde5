#include "ryno/event_store.hpp"

#include <algorithm>
#include <cerrno>
#include <cstring>
#include <fstream>
#include <sstream>

#include <fcntl.h>
#include <sys/stat.h>
#include <unistd.h>

#include <nlohmann/json.hpp>
#include <spdlog/spdlog.h>

#include "ryno/error.hpp"
#include "ryno/text.hpp"

namespace fs = std::filesystem;

namespace ryno {

std::map<std::string, std::uint64_t> SequenceTracker::check(std::span<const EventRecord> events) const {
    std::map<std::string, std::uint64_t> tails;
    for (const auto& e : events) {
        auto it = tails.find(e.session_id);
        if (it == tails.end()) it = tails.emplace(e.session_id, last(e.session_id)).first;
        if (e.sequence != it->second + 1) {
            throw IntegrityError("session " + e.session_id + ": sequence " + std::to_string(e.sequence) +
                                 " does not follow " + std::to_string(it->second));
        }
        it->second = e.sequence;
    }
    return tails;
}

void SequenceTracker::commit(std::map<std::string, std::uint64_t> tails) {
    for (auto& [id, seq] : tails) last_[id] = seq;
}

void SequenceTracker::observe(const EventRecord& e) {
    auto& v = last_[e.session_id];
    v = std::max(v, e.sequence);
}

std::uint64_t SequenceTracker::last(const std::string& session_id) const {
    auto it = last_.find(session_id);
    return it == last_.end() ? 0 : it->second;
}

void MemoryEventStore::append(std::span<const EventRecord> events) {
    std::lock_guard lock(mutex_);
    auto tails = seq_.check(events);
    events_.insert(events_.end(), events.begin(), events.end());
    seq_.commit(std::move(tails));
}

void MemoryEventStore::append_response(const assessment::ResponseRecord& record) {
    std::lock_guard lock(mutex_);
    responses_.push_back(record);
}

std::vector<EventRecord> MemoryEventStore::load_events() const {
    std::lock_guard lock(mutex_);
    return events_;
}

std::vector<assessment::ResponseRecord> MemoryEventStore::load_responses() const {
    std::lock_guard lock(mutex_);
    return responses_;
}

std::uint64_t MemoryEventStore::last_sequence(const std::string& session_id) const {
    std::lock_guard lock(mutex_);
    return seq_.last(session_id);
}

namespace {

std::string errno_text() { return std::strerror(errno); }

class Fd {
public:
    explicit Fd(int fd) : fd_(fd) {}
    Fd(const Fd&) = delete;
    Fd& operator=(const Fd&) = delete;
    ~Fd() {
        if (fd_ >= 0) ::close(fd_);
    }
    int get() const { return fd_; }

private:
    int fd_;
};

struct PendingWrite {
    fs::path path;
    std::string data;
};

void sync_dir(const fs::path& dir) {
    Fd d(::open(dir.c_str(), O_RDONLY | O_DIRECTORY));
    if (d.get() >= 0) ::fsync(d.get());
}

// Appends every pending chunk or none of them.
void write_all_or_nothing(const std::vector<PendingWrite>& writes) {
    std::vector<std::pair<fs::path, off_t>> done;
    auto rollback = [&] {
        for (auto& [path, size] : done) {
            if (::truncate(path.c_str(), size) != 0)
                spdlog::error("rollback of {} failed: {}", path.string(), errno_text());
        }
    };
    for (const auto& w : writes) {
        const bool created = !fs::exists(w.path);
        Fd fd(::open(w.path.c_str(), O_WRONLY | O_CREAT | O_APPEND | O_CLOEXEC, 0644));
        if (fd.get() < 0) {
            rollback();
            throw StorageError("cannot open " + w.path.string() + ": " + errno_text());
        }
        struct stat st {};
        if (::fstat(fd.get(), &st) != 0) {
            rollback();
            throw StorageError("cannot stat " + w.path.string() + ": " + errno_text());
        }
        done.emplace_back(w.path, st.st_size);
        std::size_t off = 0;
        while (off < w.data.size()) {
            const ssize_t n = ::write(fd.get(), w.data.data() + off, w.data.size() - off);
            if (n < 0) {
                if (errno == EINTR) continue;
                const std::string why = errno_text();
                rollback();
                throw StorageError("write to " + w.path.string() + " failed: " + why);
            }
            off += static_cast<std::size_t>(n);
        }
        if (::fdatasync(fd.get()) != 0) {
            const std::string why = errno_text();
            rollback();
            throw StorageError("fsync of " + w.path.string() + " failed: " + why);
        }
        if (created) sync_dir(w.path.parent_path());
    }
}

std::vector<fs::path> jsonl_files(const fs::path& dir) {
    std::vector<fs::path> files;
    std::error_code ec;
    for (const auto& entry : fs::directory_iterator(dir, ec)) {
        if (entry.is_regular_file() && entry.path().extension() == ".jsonl") files.push_back(entry.path());
    }
    if (ec) throw StorageError("cannot list " + dir.string() + ": " + ec.message());
    std::sort(files.begin(), files.end());
    return files;
}

}  // namespace

FileEventStore::FileEventStore(fs::path root) : root_(std::move(root)) {
    std::error_code ec;
    fs::create_directories(root_ / "events", ec);
    if (!ec) fs::create_directories(root_ / "responses", ec);
    if (ec) throw ConfigError("data_dir: cannot create " + root_.string() + ": " + ec.message());
    const fs::path probe = root_ / ".write-probe";
    {
        Fd fd(::open(probe.c_str(), O_WRONLY | O_CREAT | O_TRUNC | O_CLOEXEC, 0644));
        if (fd.get() < 0) throw ConfigError("data_dir: " + root_.string() + " is not writable: " + errno_text());
    }
    fs::remove(probe, ec);
    for (const auto& e : load_events()) seq_.observe(e);
}

std::vector<std::string> FileEventStore::read_lines(const fs::path& dir) const {
    std::vector<std::string> out;
    const auto files = jsonl_files(dir);
    for (std::size_t f = 0; f < files.size(); ++f) {
        std::ifstream in(files[f], std::ios::binary);
        if (!in) throw StorageError("cannot read " + files[f].string());
        std::stringstream buf;
        buf << in.rdbuf();
        const std::string data = buf.str();
        std::size_t pos = 0;
        while (pos < data.size()) {
            const std::size_t nl = data.find('\n', pos);
            if (nl == std::string::npos) {
                // unterminated tail: a write interrupted by a crash
                spdlog::warn("{}: ignoring {} bytes of unterminated trailing data", files[f].string(),
                             data.size() - pos);
                break;
            }
            std::string line = data.substr(pos, nl - pos);
            if (!text::trim(line).empty()) out.push_back(std::move(line));
            pos = nl + 1;
        }
    }
    return out;
}

void FileEventStore::append(std::span<const EventRecord> events) {
    if (events.empty()) return;
    std::lock_guard lock(mutex_);
    auto tails = seq_.check(events);
    std::map<std::string, std::string> by_day;
    for (const auto& e : events) by_day[text::utc_date(e.timestamp_ms)] += serialize_event(e) + "\n";
    std::vector<PendingWrite> writes;
    for (auto& [day, data] : by_day) writes.push_back({root_ / "events" / (day + ".jsonl"), std::move(data)});
    write_all_or_nothing(writes);
    seq_.commit(std::move(tails));
}

void FileEventStore::append_response(const assessment::ResponseRecord& record) {
    std::lock_guard lock(mutex_);
    nlohmann::json j = record;
    write_all_or_nothing(
        {{root_ / "responses" / (text::utc_date(record.timestamp_ms) + ".jsonl"), j.dump() + "\n"}});
}

std::vector<EventRecord> FileEventStore::load_events() const {
    std::vector<EventRecord> out;
    for (const auto& line : read_lines(root_ / "events")) out.push_back(parse_event(line));
    return out;
}

std::vector<assessment::ResponseRecord> FileEventStore::load_responses() const {
    std::vector<assessment::ResponseRecord> out;
    for (const auto& line : read_lines(root_ / "responses")) {
        try {
            out.push_back(nlohmann::json::parse(line).get<assessment::ResponseRecord>());
        } catch (const nlohmann::json::exception& e) {
            throw ParseError(std::string("response record: ") + e.what());
        }
    }
    return out;
}

std::uint64_t FileEventStore::last_sequence(const std::string& session_id) const {
    std::lock_guard lock(mutex_);
    return seq_.last(session_id);
}

bool FaultInjectingStore::take_failure() {
    int n = failures_.load();
    while (n > 0) {
        if (failures_.compare_exchange_weak(n, n - 1)) return true;
    }
    return false;
}

void FaultInjectingStore::append(std::span<const EventRecord> events) {
    if (take_failure()) throw StorageError("injected storage failure (device full)");
    inner_->append(events);
}

void FaultInjectingStore::append_response(const assessment::ResponseRecord& record) {
    if (take_failure()) throw StorageError("injected storage failure (device full)");
    inner_->append_response(record);
}

}  // namespace ryno
