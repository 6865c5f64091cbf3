// Copyright (c) 2026 The spacehsm Authors
// SPDX-License-Identifier: Apache-2.0

#include "spacehsm/engine.hpp"

#include <algorithm>
#include <cinttypes>
#include <cstdio>
#include <deque>
#include <functional>
#include <limits>
#include <map>
#include <optional>
#include <queue>
#include <random>
#include <set>
#include <tuple>

#include "spacehsm/aead.hpp"
#include "spacehsm/ax25.hpp"
#include "spacehsm/hsm.hpp"
#include "spacehsm/link.hpp"
#include "spacehsm/messages.hpp"
#include "spacehsm/power.hpp"

namespace spacehsm {

namespace {

constexpr size_t kOwnerAdversary = std::numeric_limits<size_t>::max();
constexpr uint64_t kTelemetryIntervalUs = 60 * kMicrosPerSecond;
// A request's uplink must fit this far before the window closes so the
// response (and an interleaved beacon) can come back in the same pass.
constexpr uint64_t kResponseMarginUs = 8 * kMicrosPerSecond;

std::string format_micros(uint64_t t_us) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%" PRIu64 ".%06" PRIu64,
                  t_us / kMicrosPerSecond, t_us % kMicrosPerSecond);
    return buf;
}

std::string format_fixed(double value, int digits) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.*f", digits, value);
    return buf;
}

void json_escape_into(std::string& out, std::string_view s) {
    for (char c : s) {
        switch (c) {
            case '"': out += "\\\""; break;
            case '\\': out += "\\\\"; break;
            case '\n': out += "\\n"; break;
            case '\r': out += "\\r"; break;
            case '\t': out += "\\t"; break;
            default:
                if (static_cast<unsigned char>(c) < 0x20) {
                    char buf[8];
                    std::snprintf(buf, sizeof(buf), "\\u%04x",
                                  static_cast<unsigned>(c) & 0xff);
                    out += buf;
                } else {
                    out += c;
                }
        }
    }
}

/// Incremental builder for one {"k":v,...} object body with insertion order.
struct JsonObject {
    std::string body;

    void key(std::string_view k) {
        if (!body.empty()) body += ',';
        body += '"';
        json_escape_into(body, k);
        body += "\":";
    }
    JsonObject& str(std::string_view k, std::string_view v) {
        key(k);
        body += '"';
        json_escape_into(body, v);
        body += '"';
        return *this;
    }
    JsonObject& num(std::string_view k, uint64_t v) {
        key(k);
        body += std::to_string(v);
        return *this;
    }
    JsonObject& raw(std::string_view k, std::string_view v) {
        key(k);
        body += v;
        return *this;
    }
    JsonObject& boolean(std::string_view k, bool v) {
        key(k);
        body += v ? "true" : "false";
        return *this;
    }
};

std::string message_kind_name(MessageKind kind) {
    switch (kind) {
        case MessageKind::Request: return "request";
        case MessageKind::Response: return "response";
        case MessageKind::Beacon: return "beacon";
        case MessageKind::Attestation: return "attestation";
    }
    return "unknown";
}

std::array<uint8_t, 16> request_id_from_label(std::string_view tag,
                                              std::string_view label) {
    Bytes seed;
    seed.insert(seed.end(), tag.begin(), tag.end());
    seed.insert(seed.end(), label.begin(), label.end());
    Digest d = sha256(BytesView(seed.data(), seed.size()));
    std::array<uint8_t, 16> id{};
    std::copy_n(d.bytes.begin(), 16, id.begin());
    return id;
}

/// Deterministic filler for a CSR subject of the requested total size.
Bytes subject_of_size(std::string_view tag, std::string_view label,
                      uint32_t csr_bytes) {
    size_t want = csr_bytes - kCsrFixedOverhead;
    Bytes seed;
    seed.insert(seed.end(), tag.begin(), tag.end());
    seed.insert(seed.end(), label.begin(), label.end());
    Bytes out;
    out.reserve(want);
    Digest block = sha256(BytesView(seed.data(), seed.size()));
    while (out.size() < want) {
        size_t chunk = std::min<size_t>(32, want - out.size());
        out.insert(out.end(), block.bytes.begin(), block.bytes.begin() + chunk);
        block = sha256(block.view());
    }
    return out;
}

Digest tagged_digest(uint64_t seed, std::string_view tag) {
    ByteWriter w;
    w.u64(seed);
    w.raw(BytesView(reinterpret_cast<const uint8_t*>(tag.data()), tag.size()));
    Bytes b = w.take();
    return sha256(BytesView(b.data(), b.size()));
}

std::string hex16(const std::array<uint8_t, 16>& id) {
    return hex_encode(BytesView(id.data(), id.size()));
}

} // namespace

std::string Metrics::to_json() const {
    std::string out = "{\n";
    auto line = [&](std::string_view k, const std::string& v, bool last = false) {
        out += "  \"";
        out += k;
        out += "\": ";
        out += v;
        out += last ? "\n" : ",\n";
    };
    auto u64list = [](const std::vector<uint64_t>& v) {
        std::string s = "[";
        for (size_t i = 0; i < v.size(); ++i) {
            if (i) s += ", ";
            s += std::to_string(v[i]);
        }
        return s + "]";
    };
    auto dlist = [](const std::vector<double>& v) {
        std::string s = "[";
        for (size_t i = 0; i < v.size(); ++i) {
            if (i) s += ", ";
            s += format_fixed(v[i], 6);
        }
        return s + "]";
    };
    line("certs_signed", std::to_string(certs_signed));
    line("certs_logged", std::to_string(certs_logged));
    line("certs_suppressed", std::to_string(certs_suppressed));
    line("certs_orphaned", std::to_string(certs_orphaned));
    line("certs_in_flight", std::to_string(certs_in_flight));
    line("requests_submitted", std::to_string(requests_submitted));
    line("requests_completed", std::to_string(requests_completed));
    line("requests_failed", std::to_string(requests_failed));
    line("requests_completed_per_pass", u64list(requests_completed_per_pass));
    line("alarms", std::to_string(alarms));
    line("alarms_mismatch", std::to_string(alarms_mismatch));
    line("alarms_epoch_skew", std::to_string(alarms_epoch_skew));
    line("alarms_spoof", std::to_string(alarms_spoof));
    line("time_to_detection_s", dlist(time_to_detection_s));
    line("resets", std::to_string(resets));
    line("epoch_transitions", std::to_string(epoch_transitions));
    line("faults_detected", std::to_string(faults_detected));
    line("beacons_sent", std::to_string(beacons_sent));
    line("beacons_observed", std::to_string(beacons_observed));
    line("attestations_verified", std::to_string(attestations_verified));
    line("frames_tx", std::to_string(frames_tx));
    line("frames_rx", std::to_string(frames_rx));
    line("frames_dropped", std::to_string(frames_dropped));
    line("uplink_airtime_s", format_micros(uplink_airtime_us));
    line("downlink_airtime_s", format_micros(downlink_airtime_us));
    line("analytic_capacity", std::to_string(analytic_capacity));
    line("max_dod_percent", format_fixed(max_dod_percent, 4));
    line("min_charge_mws", std::to_string(min_charge_mws));
    line("brownouts", std::to_string(brownouts));
    line("mean_completion_latency_s", format_fixed(mean_completion_latency_s, 6),
         true);
    out += "}\n";
    return out;
}

namespace {

// ---------------------------------------------------------------------------
// Engine internals
// ---------------------------------------------------------------------------

struct PendingSubmission {
    SignedCertificate cert;
    uint32_t attempts = 0;
    bool confirmed = false;
    bool abandoned = false;
    uint64_t timer_generation = 0;
};

struct Request {
    std::string label;
    std::array<uint8_t, 16> request_id{};
    Bytes csr_encoded;
    uint32_t csr_bytes = 0;
    size_t station = 0;
    uint64_t enqueued_us = 0;

    uint32_t attempts = 0;
    std::vector<uint64_t> attempt_end_us;
    uint64_t timer_generation = 0;
    bool in_txq = false;
    bool completed = false;
    bool gave_up = false;
    uint64_t completed_us = 0;

    uint16_t message_id = 0;
    uint64_t sealed_epoch = std::numeric_limits<uint64_t>::max();
    Bytes envelope;

    bool claim_active = false;
    // (epoch, leaf_index) → submission state for every certificate received
    // for this request (an epoch transition can produce two).
    std::map<std::pair<uint64_t, uint64_t>, PendingSubmission> submissions;
};

struct Station {
    StationConfig cfg;
    size_t index = 0;
    Callsign callsign;
    uint64_t offset_us = 0;
    ChannelKey key;
    std::map<uint64_t, Digest> decrypt_keys; // epoch → key, retained
    uint64_t uplink_counter = 0;
    uint16_t next_message_id = 1;
    std::deque<size_t> txq;
    Reassembler rx;
    std::optional<uint64_t> pump_at;
};

struct CertRecord {
    size_t owner = kOwnerAdversary; // station index, or adversary
    size_t request_index = std::numeric_limits<size_t>::max();
    std::string label;
    uint64_t signed_us = 0;
    bool logged = false;
    bool suppressed = false;
    bool frozen_out = false;
};

struct DownlinkItem {
    MessageKind kind = MessageKind::Response;
    std::vector<Ax25Frame> frames;
    size_t cursor = 0;
    bool broadcast = false;
    size_t dest_station = 0; // kOwnerAdversary → the adversary's radio
};

struct Event {
    uint64_t t = 0;
    uint32_t rank = 0;
    uint64_t seq = 0;
    std::function<void()> fn;
};

struct EventAfter {
    bool operator()(const Event& a, const Event& b) const {
        if (a.t != b.t) return a.t > b.t;
        if (a.rank != b.rank) return a.rank > b.rank;
        return a.seq > b.seq;
    }
};

constexpr uint32_t kRankPower = 0;
constexpr uint32_t kRankSat = 1;
constexpr uint32_t kRankAdversary = 2;
constexpr uint32_t kRankStationBase = 10;
constexpr uint32_t kRankGround = 1000;

class Engine {
public:
    explicit Engine(const ScenarioConfig& cfg) : cfg_(cfg) {}

    RunResult run();

private:
    // --- plumbing ---
    void schedule(uint64_t t, uint32_t rank, std::function<void()> fn);
    void emit(const std::string& actor, const std::string& kind,
              const JsonObject& detail);

    // --- satellite ---
    void beacon_tick();
    void enqueue_downlink(MessageKind kind, Bytes payload, bool broadcast,
                          size_t dest_station);
    void pump_downlink();
    uint64_t downlink_fit_start(uint64_t start, uint64_t frame_airtime,
                                const DownlinkItem& item) const;
    void sat_handle_frame(const Ax25Frame& frame);
    void sat_handle_request(const ReassembledMessage& msg);

    // --- stations ---
    void station_pump(size_t k);
    void request_timeout(size_t req_idx, uint64_t generation);
    void station_handle_frame(size_t k, const Ax25Frame& frame);
    void station_handle_response(size_t k, const CertResponse& resp);
    void station_handle_beacon(size_t k, const BeaconMessage& beacon);
    void station_handle_attestation(size_t k, const Attestation& att);
    void maybe_release_claim(size_t req_idx);

    // --- terrestrial ---
    void ground_observe_beacon(const BeaconObservation& obs);
    void submit_certificate(size_t req_idx, std::pair<uint64_t, uint64_t> key);
    void submission_timeout(size_t req_idx, std::pair<uint64_t, uint64_t> key,
                            uint64_t generation);
    void process_alarms(const std::vector<Alarm>& alarms);
    void schedule_monitor_poll();
    void run_monitor_poll();
    void execute_reset(uint64_t target_epoch);

    // --- adversary ---
    void adversary_action(const AdversaryAction& action);
    void adversary_forge(const AdversaryAction& action);
    void adversary_spoof_beacon();

    // --- power ---
    void power_tick();
    void advance_power(uint64_t to_us);

    // --- shared transmission helpers ---
    struct CommitResult {
        uint64_t first_start = 0;
        uint64_t last_end = 0;
    };
    /// Commits a whole uplink message (all frames back to back) no earlier
    /// than ready_us, entirely inside one visibility window of `offset_us`,
    /// ending at least `margin_us` before the window closes. Schedules
    /// frame_tx/arrival events. Returns the commitment, or nullopt when no
    /// window fits before the run ends.
    std::optional<CommitResult> commit_uplink(const std::vector<Ax25Frame>& frames,
                                              uint64_t ready_us, uint64_t offset_us,
                                              uint64_t margin_us,
                                              const std::string& actor);

    void note_epoch_transition(uint64_t from_epoch);
    void mark_violation_marker(uint64_t epoch, uint64_t t_us);
    void finalize(RunResult& result);

    uint64_t now() const { return now_; }
    uint64_t latency_us() const {
        return uint64_t{cfg_.ground.terrestrial_latency_s} * kMicrosPerSecond;
    }
    uint64_t timeout_us() const {
        return uint64_t{cfg_.ground.request_timeout_s} * kMicrosPerSecond;
    }

    // --- configuration and state ---
    ScenarioConfig cfg_;
    uint64_t now_ = 0;
    uint64_t seq_ = 0;
    bool stopped_ = false;
    std::priority_queue<Event, std::vector<Event>, EventAfter> queue_;
    std::vector<std::string> events_;
    uint64_t last_emit_us_ = 0;
    std::vector<std::string> violations_;
    Metrics metrics_;
    std::mt19937_64 rng_{1};

    // satellite
    std::optional<Hsm> hsm_;
    std::optional<BeaconMessage> bootstrap_beacon_;
    Callsign sat_callsign_{"SPHSM1", 0};
    Callsign broadcast_callsign_{"QST", 0};
    Transmitter uplink_tx_;
    Transmitter down_tx_;
    std::vector<DownlinkItem> downq_;
    std::optional<uint64_t> down_pump_at_;
    uint16_t sat_message_id_ = 1;
    Reassembler sat_rx_;
    std::optional<Bytes> attestation_payload_;
    std::optional<uint64_t> last_attestation_pass_;

    // stations / requests
    std::vector<Station> stations_;
    std::vector<Request> requests_;
    std::map<std::array<uint8_t, 16>, size_t> request_by_id_;
    std::map<Callsign, size_t> station_by_callsign_;

    // terrestrial
    LogServer log_;
    std::optional<Monitor> monitor_;
    std::vector<BeaconObservation> consensus_window_;
    bool identity_known_ = false;
    SignatureScheme identity_scheme_ = SignatureScheme::Ed25519Pad256;
    Bytes identity_key_;
    std::optional<uint64_t> poll_scheduled_at_;
    std::vector<Alarm> result_alarms_;
    OfflineVault vault_;
    bool reset_pending_ = false;
    std::map<uint64_t, uint64_t> violation_marker_; // epoch → first withheld
    std::map<uint64_t, uint64_t> spoof_marker_;     // epoch → first spoof
    std::map<std::pair<uint64_t, uint64_t>, CertRecord> certs_;
    std::map<std::pair<size_t, uint64_t>, uint64_t> pass_completions_;
    std::set<std::string> suppressed_labels_;
    uint64_t completion_latency_total_us_ = 0;

    // adversary
    std::optional<ChannelKey> stolen_key_;
    uint64_t adversary_counter_ = 0;
    uint16_t adversary_message_id_ = 1;
    Callsign adversary_callsign_{"EVIL", 0};
    std::optional<Transmitter> adversary_tx_;
    std::set<std::array<uint8_t, 16>> forged_ids_;

    // power
    BatteryState battery_;
    uint64_t power_advanced_us_ = 0;
    double max_dod_ = 0.0;
};

void Engine::schedule(uint64_t t, uint32_t rank, std::function<void()> fn) {
    queue_.push(Event{t, rank, seq_++, std::move(fn)});
}

void Engine::emit(const std::string& actor, const std::string& kind,
                  const JsonObject& detail) {
    if (now_ < last_emit_us_) {
        violations_.push_back("event stream time went backwards at " +
                              format_micros(now_) + " (" + kind + ")");
    }
    last_emit_us_ = std::max(last_emit_us_, now_);
    std::string line = "{\"time\":\"" + format_micros(now_) + "\",\"actor\":\"";
    json_escape_into(line, actor);
    line += "\",\"kind\":\"";
    json_escape_into(line, kind);
    line += "\",\"detail\":{" + detail.body + "}}";
    events_.push_back(std::move(line));
}

// ---------------------------------------------------------------------------
// Shared transmission helpers
// ---------------------------------------------------------------------------

std::optional<Engine::CommitResult> Engine::commit_uplink(
    const std::vector<Ax25Frame>& frames, uint64_t ready_us, uint64_t offset_us,
    uint64_t margin_us, const std::string& actor) {
    uint64_t total_airtime = 0;
    for (const auto& f : frames) {
        total_airtime += airtime_us(f.encoded_size(), cfg_.link.uplink_bps);
    }
    uint64_t start = std::max(ready_us, uplink_tx_.next_free_us());
    bool fitted = false;
    for (int guard = 0; guard < 1000 && !fitted; ++guard) {
        start = next_pass_start(cfg_.link, start, offset_us);
        if (start > cfg_.duration_us) return std::nullopt;
        uint64_t window_end = pass_end(cfg_.link, start, offset_us);
        if (start + total_airtime + margin_us <= window_end) {
            fitted = true;
        } else {
            start = window_end + 1;
        }
    }
    if (!fitted) return std::nullopt;

    CommitResult result;
    result.first_start = start;
    uint64_t cursor = start;
    for (const auto& frame : frames) {
        uint64_t fa = airtime_us(frame.encoded_size(), cfg_.link.uplink_bps);
        uint64_t s = uplink_tx_.earliest_start(cursor, fa);
        uint64_t end = uplink_tx_.transmit(s, fa);
        bool lost = loss_draw(rng_, cfg_.link.loss_probability);
        Bytes encoded = frame.encode();
        auto header = frame.header();
        std::string hex = hex_encode(BytesView(encoded.data(), encoded.size()));
        std::string from = frame.src.name;
        std::string to = frame.dest.name;
        uint64_t message_id = header ? header->message_id : 0;
        uint64_t frame_index = header ? header->frame_index : 0;
        uint64_t total = header ? header->total_frames : 0;
        std::string mkind = header ? message_kind_name(header->kind) : "unknown";
        size_t size = encoded.size();
        schedule(s, kRankAdversary, [this, actor, from, to, message_id, frame_index,
                                     total, mkind, size, fa, hex] {
            JsonObject d;
            d.str("direction", "uplink")
                .str("from", from)
                .str("to", to)
                .str("message", mkind)
                .num("message_id", message_id)
                .num("frame_index", frame_index)
                .num("total_frames", total)
                .num("bytes", size)
                .num("airtime_us", fa)
                .str("hex", hex);
            emit(actor, "frame_tx", d);
            ++metrics_.frames_tx;
        });
        Ax25Frame copy = frame;
        if (lost) {
            schedule(end, kRankSat, [this, from, message_id, frame_index] {
                JsonObject d;
                d.str("direction", "uplink")
                    .str("receiver", "sat")
                    .str("from", from)
                    .num("message_id", message_id)
                    .num("frame_index", frame_index)
                    .str("reason", "loss");
                emit("sat", "frame_drop", d);
                ++metrics_.frames_dropped;
            });
        } else {
            schedule(end, kRankSat, [this, copy = std::move(copy), from, message_id,
                                     frame_index, mkind] {
                JsonObject d;
                d.str("direction", "uplink")
                    .str("receiver", "sat")
                    .str("from", from)
                    .str("message", mkind)
                    .num("message_id", message_id)
                    .num("frame_index", frame_index);
                emit("sat", "frame_rx", d);
                ++metrics_.frames_rx;
                sat_handle_frame(copy);
            });
        }
        cursor = end;
    }
    result.last_end = cursor;
    return result;
}

// ---------------------------------------------------------------------------
// Satellite
// ---------------------------------------------------------------------------

void Engine::beacon_tick() {
    if (stopped_) return;
    if (now_ + uint64_t{cfg_.ground.beacon_period_s} * kMicrosPerSecond <=
        cfg_.duration_us) {
        schedule(now_ + uint64_t{cfg_.ground.beacon_period_s} * kMicrosPerSecond,
                 kRankSat, [this] { beacon_tick(); });
    }
    bool visible = false;
    for (const auto& st : stations_) {
        if (pass_visible(cfg_.link, now_, st.offset_us)) visible = true;
    }
    if (!visible) {
        bootstrap_beacon_.reset(); // a pre-contact beacon is never aired
        return;
    }
    BeaconMessage beacon;
    if (bootstrap_beacon_ && now_ == 0) {
        beacon = *bootstrap_beacon_;
        bootstrap_beacon_.reset();
    } else {
        bootstrap_beacon_.reset();
        beacon = hsm_->make_beacon();
    }
    JsonObject d;
    d.num("epoch", beacon.epoch)
        .num("sequence", beacon.sequence)
        .num("log_size", beacon.log_size)
        .str("root", beacon.accumulator_root.hex());
    emit("sat", "beacon", d);
    ++metrics_.beacons_sent;
    enqueue_downlink(MessageKind::Beacon, beacon.encode(), true, 0);

    if (attestation_payload_) {
        uint64_t base_offset = stations_.empty() ? 0 : stations_[0].offset_us;
        if (pass_visible(cfg_.link, now_, base_offset)) {
            uint64_t p = pass_index(cfg_.link, now_, base_offset);
            if (!last_attestation_pass_ || *last_attestation_pass_ != p) {
                last_attestation_pass_ = p;
                enqueue_downlink(MessageKind::Attestation, *attestation_payload_,
                                 true, 0);
            }
        }
    }
}

void Engine::enqueue_downlink(MessageKind kind, Bytes payload, bool broadcast,
                              size_t dest_station) {
    DownlinkItem item;
    item.kind = kind;
    item.broadcast = broadcast;
    item.dest_station = dest_station;
    Callsign dest = broadcast
                        ? broadcast_callsign_
                        : (dest_station == kOwnerAdversary
                               ? adversary_callsign_
                               : stations_[dest_station].callsign);
    item.frames = fragment(dest, sat_callsign_, sat_message_id_++, kind,
                           BytesView(payload.data(), payload.size()));
    downq_.push_back(std::move(item));
    if (!down_pump_at_ || *down_pump_at_ > now_) {
        down_pump_at_ = now_;
        schedule(now_, kRankSat, [this] { pump_downlink(); });
    }
}

uint64_t Engine::downlink_fit_start(uint64_t start, uint64_t frame_airtime,
                                    const DownlinkItem& item) const {
    uint64_t best = std::numeric_limits<uint64_t>::max();
    auto consider = [&](uint64_t offset) {
        uint64_t s = start;
        if (interval_visible(cfg_.link, s, s + frame_airtime, offset)) {
            best = std::min(best, s);
            return;
        }
        uint64_t w = next_pass_start(cfg_.link, s, offset);
        if (!interval_visible(cfg_.link, w, w + frame_airtime, offset)) {
            w = next_pass_start(cfg_.link, pass_end(cfg_.link, w, offset) + 1,
                                offset);
        }
        best = std::min(best, w);
    };
    if (item.broadcast) {
        for (const auto& st : stations_) consider(st.offset_us);
    } else if (item.dest_station == kOwnerAdversary) {
        consider(0);
    } else {
        consider(stations_[item.dest_station].offset_us);
    }
    return best;
}

void Engine::pump_downlink() {
    down_pump_at_.reset();
    if (stopped_ || downq_.empty()) return;

    size_t best_idx = 0;
    uint64_t best_start = std::numeric_limits<uint64_t>::max();
    uint64_t best_airtime = 0;
    for (size_t i = 0; i < downq_.size(); ++i) {
        const DownlinkItem& item = downq_[i];
        uint64_t fa = airtime_us(item.frames[item.cursor].encoded_size(),
                                 cfg_.link.downlink_bps);
        uint64_t ready = std::max(now_, down_tx_.next_free_us());
        uint64_t s = down_tx_.earliest_start(ready, fa);
        for (int guard = 0; guard < 64; ++guard) {
            uint64_t fit = downlink_fit_start(s, fa, item);
            if (fit == s) break;
            s = down_tx_.earliest_start(fit, fa);
        }
        if (s < best_start) {
            best_start = s;
            best_idx = i;
            best_airtime = fa;
        }
    }
    if (best_start > cfg_.duration_us) {
        downq_.clear(); // nothing can be delivered before the run ends
        return;
    }

    DownlinkItem& item = downq_[best_idx];
    const Ax25Frame frame = item.frames[item.cursor];
    uint64_t end = down_tx_.transmit(best_start, best_airtime);

    Bytes encoded = frame.encode();
    auto header = frame.header();
    std::string hex = hex_encode(BytesView(encoded.data(), encoded.size()));
    std::string to = frame.dest.name;
    uint64_t message_id = header ? header->message_id : 0;
    uint64_t frame_index = header ? header->frame_index : 0;
    uint64_t total = header ? header->total_frames : 0;
    std::string mkind = header ? message_kind_name(header->kind) : "unknown";
    size_t size = encoded.size();
    uint64_t fa = best_airtime;
    schedule(best_start, kRankSat, [this, to, message_id, frame_index, total,
                                    mkind, size, fa, hex] {
        JsonObject d;
        d.str("direction", "downlink")
            .str("from", "SPHSM1")
            .str("to", to)
            .str("message", mkind)
            .num("message_id", message_id)
            .num("frame_index", frame_index)
            .num("total_frames", total)
            .num("bytes", size)
            .num("airtime_us", fa)
            .str("hex", hex);
        emit("sat", "frame_tx", d);
        ++metrics_.frames_tx;
    });

    // Deliveries: each receiver needs the whole frame inside its window and
    // an independent loss draw, in station order for determinism.
    auto deliver_to_station = [&](size_t k) {
        const Station& st = stations_[k];
        if (!interval_visible(cfg_.link, best_start, end, st.offset_us)) return;
        bool lost = loss_draw(rng_, cfg_.link.loss_probability);
        std::string receiver = st.cfg.id;
        if (lost) {
            schedule(end, kRankStationBase + static_cast<uint32_t>(k),
                     [this, receiver, message_id, frame_index] {
                         JsonObject d;
                         d.str("direction", "downlink")
                             .str("receiver", receiver)
                             .str("from", "SPHSM1")
                             .num("message_id", message_id)
                             .num("frame_index", frame_index)
                             .str("reason", "loss");
                         emit(receiver, "frame_drop", d);
                         ++metrics_.frames_dropped;
                     });
            return;
        }
        Ax25Frame copy = frame;
        schedule(end, kRankStationBase + static_cast<uint32_t>(k),
                 [this, k, copy = std::move(copy), receiver, message_id,
                  frame_index, mkind] {
                     JsonObject d;
                     d.str("direction", "downlink")
                         .str("receiver", receiver)
                         .str("from", "SPHSM1")
                         .str("message", mkind)
                         .num("message_id", message_id)
                         .num("frame_index", frame_index);
                     emit(receiver, "frame_rx", d);
                     ++metrics_.frames_rx;
                     station_handle_frame(k, copy);
                 });
    };
    if (item.broadcast) {
        for (size_t k = 0; k < stations_.size(); ++k) deliver_to_station(k);
    } else if (item.dest_station != kOwnerAdversary) {
        deliver_to_station(item.dest_station);
    }
    // Frames to the adversary's callsign are transmitted (the satellite does
    // not discriminate) but no modeled receiver acts on them.

    ++item.cursor;
    if (item.cursor >= item.frames.size()) {
        downq_.erase(downq_.begin() + static_cast<ptrdiff_t>(best_idx));
    }
    if (!downq_.empty()) {
        down_pump_at_ = end;
        schedule(end, kRankSat, [this] { pump_downlink(); });
    }
}

void Engine::note_epoch_transition(uint64_t from_epoch) {
    const auto& archives = hsm_->archived_epochs();
    JsonObject d;
    d.num("from", from_epoch).num("to", hsm_->epoch());
    if (!archives.empty()) {
        d.num("archived_size", archives.back().size)
            .str("archived_root", archives.back().root.hex());
    }
    emit("sat", "epoch_transition", d);
    ++metrics_.epoch_transitions;
}

void Engine::sat_handle_frame(const Ax25Frame& frame) {
    if (stopped_) return;
    auto msg = sat_rx_.accept(frame);
    if (!msg) return;
    if (msg->kind == MessageKind::Request) {
        sat_handle_request(*msg);
    }
    // Other message kinds are downlink-only; ignore stray traffic.
}

void Engine::sat_handle_request(const ReassembledMessage& msg) {
    uint64_t epoch_before = hsm_->epoch();
    auto plaintext = hsm_->try_decrypt(BytesView(msg.payload.data(),
                                                 msg.payload.size()));
    if (hsm_->epoch() != epoch_before) {
        note_epoch_transition(epoch_before);
    }
    if (!plaintext) {
        JsonObject d;
        d.str("from", msg.src.name).str("reason", "undecryptable");
        emit("sat", "uplink_drop", d);
        return;
    }
    UplinkResult result =
        hsm_->process_uplink(BytesView(plaintext->data(), plaintext->size()));
    if (result.faults_detected > 0) {
        JsonObject d;
        d.num("epoch", hsm_->epoch())
            .num("count", result.faults_detected)
            .boolean("released", result.status == UplinkStatus::Ok);
        emit("sat", "fault_detected", d);
    }
    switch (result.status) {
        case UplinkStatus::Malformed: {
            JsonObject d;
            d.str("from", msg.src.name).str("reason", "malformed");
            emit("sat", "uplink_drop", d);
            return;
        }
        case UplinkStatus::FaultExhausted: {
            JsonObject d;
            d.str("from", msg.src.name).num("epoch", hsm_->epoch());
            emit("sat", "sign_abandoned", d);
            return;
        }
        case UplinkStatus::Ok: {
            const SignedCertificate& cert = *result.certificate;
            auto key = std::make_pair(cert.signer_epoch, cert.leaf_index);
            CertRecord record;
            record.signed_us = now_;
            auto it = request_by_id_.find(cert.csr.request_id);
            if (it != request_by_id_.end()) {
                record.owner = requests_[it->second].station;
                record.request_index = it->second;
                record.label = requests_[it->second].label;
            } else if (forged_ids_.contains(cert.csr.request_id)) {
                record.owner = kOwnerAdversary;
                record.label = "forged";
                // A forged certificate will never be published by its
                // requester; the clock for detection starts now.
                mark_violation_marker(cert.signer_epoch, now_);
                ++metrics_.certs_suppressed;
            }
            certs_.emplace(key, std::move(record));
            ++metrics_.certs_signed;
            JsonObject d;
            d.num("epoch", cert.signer_epoch)
                .num("leaf_index", cert.leaf_index)
                .str("request_id", hex16(cert.csr.request_id))
                .str("label", certs_.at(key).label)
                .num("log_size", hsm_->accumulator().size())
                .str("root", hsm_->accumulator().root().hex())
                .num("faults_detected", result.faults_detected);
            emit("sat", "cert_signed", d);
            break;
        }
        case UplinkStatus::Duplicate: {
            JsonObject d;
            d.str("from", msg.src.name)
                .str("request_id", hex16(result.response->request_id));
            emit("sat", "uplink_duplicate", d);
            break;
        }
    }
    if (!result.response) return;
    Bytes sealed = hsm_->seal(result.response->encode());
    bool broadcast = cfg_.ground.broadcast_responses;
    size_t dest = kOwnerAdversary;
    auto sit = station_by_callsign_.find(msg.src);
    if (sit != station_by_callsign_.end()) dest = sit->second;
    enqueue_downlink(MessageKind::Response, std::move(sealed),
                     broadcast && dest != kOwnerAdversary, dest);
}

// ---------------------------------------------------------------------------
// Stations
// ---------------------------------------------------------------------------

void Engine::station_pump(size_t k) {
    Station& st = stations_[k];
    st.pump_at.reset();
    if (stopped_ || !identity_known_ || st.txq.empty()) return;

    size_t req_idx = st.txq.front();
    Request& req = requests_[req_idx];
    if (req.completed || req.gave_up) {
        st.txq.pop_front();
        req.in_txq = false;
        schedule(now_, kRankStationBase + static_cast<uint32_t>(k),
                 [this, k] { station_pump(k); });
        return;
    }

    // Seal lazily so a key reset re-encrypts queued requests. A fresh seal
    // is a different ciphertext, so it travels under a fresh message id.
    if (req.sealed_epoch != st.key.epoch) {
        auto nonce = direction_nonce(kDirectionUplink,
                                     static_cast<uint32_t>(k),
                                     st.uplink_counter++);
        req.envelope = aead_seal(st.key.key,
                                 BytesView(nonce.data(), nonce.size()),
                                 BytesView(req.csr_encoded.data(),
                                           req.csr_encoded.size()));
        req.sealed_epoch = st.key.epoch;
        req.message_id = st.next_message_id++;
    }

    auto frames = fragment(sat_callsign_, st.callsign, req.message_id,
                           MessageKind::Request,
                           BytesView(req.envelope.data(), req.envelope.size()));
    auto committed = commit_uplink(frames, now_, st.offset_us, kResponseMarginUs,
                                   st.cfg.id);
    if (!committed) {
        // No usable window before the run ends; leave the request queued.
        st.txq.pop_front();
        req.in_txq = false;
        return;
    }
    st.txq.pop_front();
    req.in_txq = false;
    ++req.attempts;
    req.attempt_end_us.push_back(committed->last_end);
    uint64_t generation = ++req.timer_generation;
    schedule(committed->last_end + timeout_us(),
             kRankStationBase + static_cast<uint32_t>(k),
             [this, req_idx, generation] { request_timeout(req_idx, generation); });

    // Pipeline: line up the next queued request as soon as the radio frees.
    if (!st.txq.empty()) {
        uint64_t next_at = uplink_tx_.next_free_us();
        st.pump_at = next_at;
        schedule(next_at, kRankStationBase + static_cast<uint32_t>(k),
                 [this, k] { station_pump(k); });
    }
}

void Engine::request_timeout(size_t req_idx, uint64_t generation) {
    Request& req = requests_[req_idx];
    if (stopped_ || req.completed || req.gave_up ||
        req.timer_generation != generation || req.in_txq) {
        return;
    }
    Station& st = stations_[req.station];
    if (req.attempts > cfg_.ground.request_retries) {
        req.gave_up = true;
        ++metrics_.requests_failed;
        JsonObject d;
        d.str("station", st.cfg.id)
            .str("label", req.label)
            .num("attempts", req.attempts);
        emit(st.cfg.id, "request_failed", d);
        maybe_release_claim(req_idx);
        return;
    }
    req.in_txq = true;
    st.txq.push_front(req_idx); // retries go ahead of fresh requests
    if (!st.pump_at || *st.pump_at > now_) {
        st.pump_at = now_;
        schedule(now_, kRankStationBase + static_cast<uint32_t>(req.station),
                 [this, k = req.station] { station_pump(k); });
    }
}

void Engine::station_handle_frame(size_t k, const Ax25Frame& frame) {
    if (stopped_) return;
    Station& st = stations_[k];
    // Stations act on frames addressed to them or to the broadcast callsign.
    if (!(frame.dest == st.callsign || frame.dest == broadcast_callsign_)) return;
    auto msg = st.rx.accept(frame);
    if (!msg) return;
    switch (msg->kind) {
        case MessageKind::Beacon: {
            auto beacon = BeaconMessage::decode(
                BytesView(msg->payload.data(), msg->payload.size()));
            if (beacon) station_handle_beacon(k, *beacon);
            break;
        }
        case MessageKind::Response: {
            std::optional<Bytes> plain;
            for (auto it = st.decrypt_keys.rbegin(); it != st.decrypt_keys.rend();
                 ++it) {
                plain = aead_open(it->second,
                                  BytesView(msg->payload.data(),
                                            msg->payload.size()));
                if (plain) break;
            }
            if (!plain) break;
            auto resp = CertResponse::decode(BytesView(plain->data(),
                                                       plain->size()));
            if (resp) station_handle_response(k, *resp);
            break;
        }
        case MessageKind::Attestation: {
            auto att = Attestation::decode(
                BytesView(msg->payload.data(), msg->payload.size()));
            if (att) station_handle_attestation(k, *att);
            break;
        }
        case MessageKind::Request:
            break; // uplink-only
    }
}

void Engine::station_handle_beacon(size_t k, const BeaconMessage& beacon) {
    BeaconObservation obs;
    obs.t_us = now_;
    obs.via_station = stations_[k].cfg.id;
    obs.beacon = beacon;
    schedule(now_ + latency_us(), kRankGround,
             [this, obs = std::move(obs)] { ground_observe_beacon(obs); });
}

void Engine::station_handle_attestation(size_t k, const Attestation& att) {
    Bytes payload = attestation_signed_payload(
        BytesView(att.attested_key.data(), att.attested_key.size()));
    bool verified =
        identity_known_ && att.attested_key == identity_key_ &&
        verify(identity_scheme_,
               BytesView(att.attester_key.data(), att.attester_key.size()),
               BytesView(payload.data(), payload.size()),
               BytesView(att.signature.data(), att.signature.size()));
    JsonObject d;
    d.boolean("verified", verified);
    emit(stations_[k].cfg.id, "attestation", d);
    if (verified) ++metrics_.attestations_verified;
}

void Engine::station_handle_response(size_t k, const CertResponse& resp) {
    auto it = request_by_id_.find(resp.request_id);
    if (it == request_by_id_.end()) return;
    size_t req_idx = it->second;
    Request& req = requests_[req_idx];
    if (req.station != k) return; // only the owner acts on a response copy

    auto cert_key = std::make_pair(resp.signer_epoch, resp.leaf_index);
    if (req.submissions.contains(cert_key)) return; // duplicate response

    // Reconstruct and verify the full certificate before publishing it.
    auto csr = CsrMessage::decode(BytesView(req.csr_encoded.data(),
                                            req.csr_encoded.size()));
    if (!csr) return;
    Bytes payload = cert_signed_payload(resp.signer_epoch, resp.leaf_index,
                                        BytesView(req.csr_encoded.data(),
                                                  req.csr_encoded.size()));
    if (!identity_known_ ||
        !verify(identity_scheme_, BytesView(identity_key_.data(),
                                            identity_key_.size()),
                BytesView(payload.data(), payload.size()),
                BytesView(resp.signature.data(), resp.signature.size()))) {
        JsonObject d;
        d.str("station", stations_[k].cfg.id)
            .str("request_id", hex16(resp.request_id))
            .str("reason", "signature");
        emit(stations_[k].cfg.id, "response_rejected", d);
        return;
    }

    SignedCertificate cert;
    cert.csr = std::move(*csr);
    cert.signature = resp.signature;
    cert.signer_epoch = resp.signer_epoch;
    cert.leaf_index = resp.leaf_index;

    PendingSubmission submission;
    submission.cert = std::move(cert);
    req.submissions.emplace(cert_key, std::move(submission));

    if (!req.completed) {
        req.completed = true;
        req.completed_us = now_;
        ++metrics_.requests_completed;
        completion_latency_total_us_ += now_ - req.enqueued_us;
        // Attribute the completion to the visibility window whose uplink
        // airtime the request consumed: the latest attempt already on air.
        uint64_t attempt_end = req.attempt_end_us.empty()
                                   ? now_
                                   : req.attempt_end_us.front();
        for (uint64_t end : req.attempt_end_us) {
            if (end <= now_) attempt_end = end;
        }
        uint64_t pass = pass_index(cfg_.link, attempt_end,
                                   stations_[k].offset_us);
        ++pass_completions_[{k, pass}];
        JsonObject d;
        d.str("station", stations_[k].cfg.id)
            .str("label", req.label)
            .num("epoch", resp.signer_epoch)
            .num("leaf_index", resp.leaf_index)
            .raw("latency_s", format_micros(now_ - req.enqueued_us))
            .num("pass", pass)
            .num("attempts", req.attempts);
        emit(stations_[k].cfg.id, "request_completed", d);
    }

    schedule(now_ + latency_us(), kRankGround,
             [this, req_idx, cert_key] { submit_certificate(req_idx, cert_key); });
}

void Engine::maybe_release_claim(size_t req_idx) {
    Request& req = requests_[req_idx];
    if (!req.claim_active) return;
    if (!req.completed && !req.gave_up) return;
    for (const auto& [key, submission] : req.submissions) {
        if (!submission.confirmed && !submission.abandoned) return;
    }
    req.claim_active = false;
    auto id = req.request_id;
    schedule(now_ + latency_us(), kRankGround, [this, id] {
        if (!monitor_) return;
        monitor_->remove_claim(id);
        JsonObject d;
        d.str("action", "release")
            .str("request_id", hex16(id))
            .num("active_claims", monitor_->active_claims());
        emit("monitor", "claim", d);
        run_monitor_poll();
    });
}

// ---------------------------------------------------------------------------
// Terrestrial side
// ---------------------------------------------------------------------------

void Engine::ground_observe_beacon(const BeaconObservation& obs) {
    if (stopped_) return;
    if (!identity_known_) {
        consensus_window_.push_back(obs);
        ConsensusResult result = consensus_bootstrap(
            consensus_window_, cfg_.ground.consensus_threshold);
        if (result.conflict) {
            JsonObject d;
            d.str("outcome", "conflict")
                .num("observations", consensus_window_.size());
            emit("monitor", "consensus", d);
            consensus_window_.clear(); // start over once the airwaves settle
            return;
        }
        if (!result.decided) return;
        identity_known_ = true;
        identity_scheme_ = result.scheme;
        identity_key_ = result.public_key;
        log_.set_identity(result.scheme, result.public_key);
        monitor_->set_identity(result.scheme, result.public_key);
        JsonObject d;
        d.str("outcome", "decided")
            .str("scheme", scheme_name(result.scheme))
            .num("observations", consensus_window_.size());
        emit("monitor", "consensus", d);
        consensus_window_.clear();
        for (size_t k = 0; k < stations_.size(); ++k) {
            schedule(now_, kRankStationBase + static_cast<uint32_t>(k),
                     [this, k] { station_pump(k); });
        }
        // The deciding beacon also serves as the first monitored one.
    }
    uint64_t expected_before = monitor_->expected_epoch();
    auto alarms = monitor_->observe_beacon(now_, obs, log_);
    metrics_.beacons_observed = monitor_->beacons_processed();
    if (monitor_->expected_epoch() > expected_before) {
        auto frozen = log_.observe_epoch(monitor_->expected_epoch());
        for (uint64_t epoch : frozen) {
            const CertificateLog* lg = log_.log_for(epoch);
            JsonObject d;
            d.num("epoch", epoch).num("entries", lg ? lg->size() : 0);
            emit("log", "log_frozen", d);
        }
    }
    process_alarms(alarms);
    schedule_monitor_poll();
}

void Engine::submit_certificate(size_t req_idx,
                                std::pair<uint64_t, uint64_t> cert_key) {
    if (stopped_) return;
    Request& req = requests_[req_idx];
    auto sit = req.submissions.find(cert_key);
    if (sit == req.submissions.end()) return;
    PendingSubmission& submission = sit->second;
    if (submission.confirmed || submission.abandoned) return;
    ++submission.attempts;
    const std::string& station_id = stations_[req.station].cfg.id;

    if (suppressed_labels_.contains(req.label)) {
        auto rit = certs_.find(cert_key);
        if (rit != certs_.end() && !rit->second.suppressed) {
            rit->second.suppressed = true;
            ++metrics_.certs_suppressed;
            mark_violation_marker(cert_key.first, now_);
        }
        JsonObject d;
        d.str("station", station_id)
            .str("label", req.label)
            .num("epoch", cert_key.first)
            .num("leaf_index", cert_key.second)
            .str("status", "suppressed");
        emit("log", "log_submit", d);
    } else {
        auto outcome = log_.submit(submission.cert);
        const char* status = "appended";
        switch (outcome.status) {
            case SubmitResult::Appended: status = "appended"; break;
            case SubmitResult::Buffered: status = "buffered"; break;
            case SubmitResult::Duplicate: status = "duplicate"; break;
            case SubmitResult::Frozen: status = "frozen"; break;
            case SubmitResult::Mismatch: status = "mismatch"; break;
            case SubmitResult::BadSignature: status = "bad_signature"; break;
        }
        JsonObject d;
        d.str("station", station_id)
            .str("label", req.label)
            .num("epoch", cert_key.first)
            .num("leaf_index", cert_key.second)
            .str("status", status);
        emit("log", "log_submit", d);

        if (outcome.status == SubmitResult::Mismatch ||
            outcome.status == SubmitResult::BadSignature) {
            violations_.push_back("log rejected an honest submission (" +
                                  std::string(status) + ") for " + req.label);
        }
        if (outcome.status == SubmitResult::Frozen) {
            submission.abandoned = true;
            auto rit = certs_.find(cert_key);
            if (rit != certs_.end()) rit->second.frozen_out = true;
            maybe_release_claim(req_idx);
            return;
        }
        for (uint64_t leaf : outcome.appended) {
            auto key = std::make_pair(cert_key.first, leaf);
            auto rit = certs_.find(key);
            if (rit == certs_.end()) continue;
            rit->second.logged = true;
            ++metrics_.certs_logged;
            const CertificateLog* log = log_.log_for(cert_key.first);
            JsonObject d;
            d.num("epoch", cert_key.first)
                .num("leaf_index", leaf)
                .str("label", rit->second.label)
                .num("log_size", log ? log->size() : 0)
                .num("buffered", log ? log->buffered_count() : 0);
            emit("log", "cert_logged", d);
            // Confirm to the owning station so it can settle its claim.
            if (rit->second.request_index != std::numeric_limits<size_t>::max()) {
                size_t owner_req = rit->second.request_index;
                schedule(now_ + latency_us(), kRankGround,
                         [this, owner_req, key] {
                             Request& r = requests_[owner_req];
                             auto s = r.submissions.find(key);
                             if (s == r.submissions.end()) return;
                             s->second.confirmed = true;
                             maybe_release_claim(owner_req);
                         });
            }
        }
        run_monitor_poll();
    }

    // Resubmit until the log confirms; a persistently suppressed submission
    // is eventually abandoned, which exposes the gap to the monitor.
    if (submission.attempts > cfg_.ground.request_retries) {
        submission.abandoned = true;
        JsonObject d;
        d.str("station", station_id)
            .str("label", req.label)
            .num("epoch", cert_key.first)
            .num("leaf_index", cert_key.second)
            .str("status", "abandoned");
        emit("log", "log_submit", d);
        maybe_release_claim(req_idx);
        return;
    }
    uint64_t generation = ++submission.timer_generation;
    schedule(now_ + timeout_us(), kRankGround,
             [this, req_idx, cert_key, generation] {
                 submission_timeout(req_idx, cert_key, generation);
             });
}

void Engine::submission_timeout(size_t req_idx,
                                std::pair<uint64_t, uint64_t> cert_key,
                                uint64_t generation) {
    if (stopped_) return;
    Request& req = requests_[req_idx];
    auto sit = req.submissions.find(cert_key);
    if (sit == req.submissions.end()) return;
    PendingSubmission& submission = sit->second;
    if (submission.confirmed || submission.abandoned ||
        submission.timer_generation != generation) {
        return;
    }
    submit_certificate(req_idx, cert_key);
}

void Engine::process_alarms(const std::vector<Alarm>& alarms) {
    for (const Alarm& alarm : alarms) {
        ++metrics_.alarms;
        switch (alarm.kind) {
            case AlarmKind::Mismatch: ++metrics_.alarms_mismatch; break;
            case AlarmKind::EpochSkew: ++metrics_.alarms_epoch_skew; break;
            case AlarmKind::Spoof: ++metrics_.alarms_spoof; break;
        }
        JsonObject d;
        d.str("alarm", alarm_kind_name(alarm.kind))
            .num("epoch", alarm.epoch)
            .num("beacon_sequence", alarm.beacon_sequence)
            .str("reason", alarm.reason);
        emit("monitor", "alarm", d);
        result_alarms_.push_back(alarm);

        const std::map<uint64_t, uint64_t>& markers =
            alarm.kind == AlarmKind::Spoof ? spoof_marker_ : violation_marker_;
        auto mit = markers.find(alarm.epoch);
        if (mit != markers.end() && alarm.t_us >= mit->second) {
            metrics_.time_to_detection_s.push_back(
                static_cast<double>(alarm.t_us - mit->second) / 1e6);
        }

        // Compromise response: a mismatch or skew alarm for the current
        // epoch schedules the key reset after the configured delay.
        if (alarm.kind != AlarmKind::Spoof && !reset_pending_ &&
            monitor_ && alarm.epoch == monitor_->expected_epoch()) {
            reset_pending_ = true;
            uint64_t target = monitor_->expected_epoch() + 1;
            uint64_t at = now_ + uint64_t{cfg_.ground.reset_delay_s} *
                                     kMicrosPerSecond;
            schedule(at, kRankGround, [this, target] { execute_reset(target); });
        }
    }
}

void Engine::execute_reset(uint64_t target_epoch) {
    if (stopped_) return;
    reset_pending_ = false;
    if (hsm_->epoch() >= target_epoch) return; // already advanced
    ChannelKey key = vault_key_for_epoch(vault_, target_epoch);
    for (auto& st : stations_) {
        st.key = key;
        st.decrypt_keys.emplace(key.epoch, key.key);
    }
    ++metrics_.resets;
    JsonObject d;
    d.num("target_epoch", target_epoch).num("stations", stations_.size());
    emit("reset", "reset", d);
    // Re-arm every unanswered request: its cached envelope is stale and the
    // satellite will only follow once it hears traffic under the new key.
    for (size_t i = 0; i < requests_.size(); ++i) {
        Request& req = requests_[i];
        if (req.completed || req.gave_up || req.in_txq) continue;
        if (req.attempts == 0) continue; // still queued, reseals lazily
        ++req.timer_generation;          // cancel the outstanding timeout
        req.in_txq = true;
        stations_[req.station].txq.push_front(i);
    }
    for (size_t k = 0; k < stations_.size(); ++k) {
        schedule(now_, kRankStationBase + static_cast<uint32_t>(k),
                 [this, k] { station_pump(k); });
    }
}

void Engine::schedule_monitor_poll() {
    if (!monitor_) return;
    auto due = monitor_->next_check_due();
    if (!due) return;
    // A check that is already due but survived the last poll is being held
    // open by active claims; re-poll periodically rather than immediately,
    // or the loop would spin without advancing simulated time.  Claim
    // releases trigger an immediate poll on their own.
    uint64_t at = *due > now_ ? *due : now_ + kMicrosPerSecond;
    if (poll_scheduled_at_ && *poll_scheduled_at_ <= at) return;
    poll_scheduled_at_ = at;
    schedule(at, kRankGround, [this] {
        poll_scheduled_at_.reset();
        run_monitor_poll();
    });
}

void Engine::run_monitor_poll() {
    if (stopped_ || !monitor_ || !monitor_->online()) return;
    auto alarms = monitor_->poll(now_, log_);
    process_alarms(alarms);
    schedule_monitor_poll();
}

// ---------------------------------------------------------------------------
// Adversary
// ---------------------------------------------------------------------------

void Engine::adversary_action(const AdversaryAction& action) {
    if (stopped_) return;
    switch (action.kind) {
        case AdversaryActionKind::StealKey: {
            stolen_key_ = hsm_->channel_key();
            JsonObject d;
            d.str("action", "steal_key").num("epoch", stolen_key_->epoch);
            emit("adv", "adversary", d);
            break;
        }
        case AdversaryActionKind::ForgeRequest:
            adversary_forge(action);
            break;
        case AdversaryActionKind::SuppressLogSubmission: {
            suppressed_labels_.insert(action.id);
            JsonObject d;
            d.str("action", "suppress_log_submission").str("label", action.id);
            emit("adv", "adversary", d);
            break;
        }
        case AdversaryActionKind::SpoofBeacon:
            adversary_spoof_beacon();
            break;
        case AdversaryActionKind::InjectFaults: {
            hsm_->set_fault_rate(action.rate);
            JsonObject d;
            d.str("action", "inject_faults")
                .raw("rate", format_fixed(action.rate, 3))
                .raw("until_s", format_micros(action.until_us));
            emit("adv", "adversary", d);
            schedule(action.until_us, kRankAdversary, [this] {
                if (stopped_) return;
                hsm_->set_fault_rate(cfg_.hsm.fault_rate);
                JsonObject d2;
                d2.str("action", "inject_faults")
                    .raw("rate", format_fixed(cfg_.hsm.fault_rate, 3));
                emit("adv", "adversary", d2);
            });
            break;
        }
    }
}

void Engine::adversary_forge(const AdversaryAction& action) {
    if (!stolen_key_) {
        JsonObject d;
        d.str("action", "forge_request").str("outcome", "no stolen key");
        emit("adv", "adversary", d);
        return;
    }
    CsrMessage csr;
    csr.subject = subject_of_size("forge-subject:", action.id, action.csr_bytes);
    csr.request_id = request_id_from_label("forge-id:", action.id);
    csr.timestamp_us = now_;
    forged_ids_.insert(csr.request_id);
    Bytes plaintext = csr.encode();
    auto nonce = direction_nonce(kDirectionUplink, 0xFFFFFF,
                                 adversary_counter_++);
    Bytes envelope = aead_seal(stolen_key_->key,
                               BytesView(nonce.data(), nonce.size()),
                               BytesView(plaintext.data(), plaintext.size()));
    auto frames = fragment(sat_callsign_, adversary_callsign_,
                           adversary_message_id_++, MessageKind::Request,
                           BytesView(envelope.data(), envelope.size()));
    JsonObject d;
    d.str("action", "forge_request")
        .str("label", action.id)
        .str("request_id", hex16(csr.request_id))
        .num("csr_bytes", action.csr_bytes)
        .num("sealed_epoch", stolen_key_->epoch);
    emit("adv", "adversary", d);
    commit_uplink(frames, now_, 0, 0, "adv");
}

void Engine::adversary_spoof_beacon() {
    Digest seed = tagged_digest(cfg_.seed, "adversary-spoof-key");
    KeyPair fake = KeyPair::generate(cfg_.hsm.scheme, seed.view());
    BeaconMessage beacon;
    beacon.scheme = cfg_.hsm.scheme;
    beacon.public_key = fake.public_key;
    beacon.accumulator_root = tagged_digest(cfg_.seed, "spoofed-root");
    beacon.log_size = 7;
    beacon.epoch = hsm_->epoch();
    beacon.sequence = 9000 + adversary_counter_++;
    Bytes spoof_payload = beacon.signed_payload();
    beacon.beacon_signature =
        sign(fake, BytesView(spoof_payload.data(), spoof_payload.size()));
    spoof_marker_.try_emplace(beacon.epoch, now_);
    JsonObject d;
    d.str("action", "spoof_beacon")
        .num("epoch", beacon.epoch)
        .num("sequence", beacon.sequence);
    emit("adv", "adversary", d);

    // The adversary's terrestrial transmitter reaches every station; the
    // spoofed frames carry the satellite's callsign, which is exactly why
    // callsigns cannot authenticate anything.
    Bytes payload = beacon.encode();
    auto frames = fragment(broadcast_callsign_, sat_callsign_,
                           static_cast<uint16_t>(40000 + adversary_counter_),
                           MessageKind::Beacon,
                           BytesView(payload.data(), payload.size()));
    uint64_t cursor = std::max(now_, adversary_tx_->next_free_us());
    for (const auto& frame : frames) {
        uint64_t fa = airtime_us(frame.encoded_size(), cfg_.link.downlink_bps);
        uint64_t s = adversary_tx_->earliest_start(cursor, fa);
        uint64_t end = adversary_tx_->transmit(s, fa);
        Bytes encoded = frame.encode();
        auto header = frame.header();
        std::string hex = hex_encode(BytesView(encoded.data(), encoded.size()));
        uint64_t message_id = header ? header->message_id : 0;
        uint64_t frame_index = header ? header->frame_index : 0;
        uint64_t total = header ? header->total_frames : 0;
        size_t size = encoded.size();
        schedule(s, kRankAdversary, [this, message_id, frame_index, total, size,
                                     fa, hex] {
            JsonObject dd;
            dd.str("direction", "downlink")
                .str("from", "SPHSM1")
                .str("to", "QST")
                .str("message", "beacon")
                .num("message_id", message_id)
                .num("frame_index", frame_index)
                .num("total_frames", total)
                .num("bytes", size)
                .num("airtime_us", fa)
                .str("hex", hex);
            emit("adv", "frame_tx", dd);
            ++metrics_.frames_tx;
        });
        for (size_t k = 0; k < stations_.size(); ++k) {
            Ax25Frame copy = frame;
            schedule(end, kRankStationBase + static_cast<uint32_t>(k),
                     [this, k, copy = std::move(copy), message_id, frame_index] {
                         JsonObject dd;
                         dd.str("direction", "downlink")
                             .str("receiver", stations_[k].cfg.id)
                             .str("from", "SPHSM1")
                             .str("message", "beacon")
                             .num("message_id", message_id)
                             .num("frame_index", frame_index);
                         emit(stations_[k].cfg.id, "frame_rx", dd);
                         ++metrics_.frames_rx;
                         station_handle_frame(k, copy);
                     });
        }
        cursor = end;
    }
}

// ---------------------------------------------------------------------------
// Power
// ---------------------------------------------------------------------------

void Engine::advance_power(uint64_t to_us) {
    const uint64_t period_us =
        uint64_t{cfg_.power.orbit_period_s()} * kMicrosPerSecond;
    const uint64_t daylight_us =
        uint64_t{cfg_.power.daylight_s} * kMicrosPerSecond;
    while (power_advanced_us_ < to_us && !stopped_) {
        uint64_t pos = period_us == 0 ? 0 : power_advanced_us_ % period_us;
        bool daylight = pos < daylight_us;
        uint64_t boundary = power_advanced_us_ - pos +
                            (daylight ? daylight_us : period_us);
        uint64_t step_end = std::min(boundary, to_us);
        uint64_t dt_us = step_end - power_advanced_us_;
        if (dt_us == 0) break;
        uint32_t dt_s = static_cast<uint32_t>(dt_us / kMicrosPerSecond);
        if (dt_s > 0) {
            try {
                battery_ = step(battery_, cfg_.power, dt_s, daylight);
            } catch (const BrownoutError&) {
                ++metrics_.brownouts;
                battery_.charge_mws = 0;
                battery_.min_charge_mws = 0;
                max_dod_ = 100.0;
                JsonObject d;
                d.num("charge_mws", 0).boolean("daylight", daylight);
                emit("sat", "brownout", d);
                stopped_ = true;
                return;
            }
            max_dod_ = std::max(max_dod_, dod_percent(cfg_.power, battery_));
        }
        power_advanced_us_ = step_end;
        if (dt_s == 0) break; // sub-second tail at a non-integral target
    }
}

void Engine::power_tick() {
    if (stopped_) return;
    advance_power(now_);
    if (stopped_) return;
    JsonObject d;
    d.num("charge_mws", battery_.charge_mws)
        .raw("dod_percent", format_fixed(dod_percent(cfg_.power, battery_), 4))
        .boolean("daylight", daylight_at(cfg_.power, now_));
    emit("sat", "battery_telemetry", d);
    uint64_t next = now_ + kTelemetryIntervalUs;
    if (next <= cfg_.duration_us) {
        schedule(next, kRankPower, [this] { power_tick(); });
    }
}

// ---------------------------------------------------------------------------
// Marker / finalize
// ---------------------------------------------------------------------------

void Engine::mark_violation_marker(uint64_t epoch, uint64_t t_us) {
    violation_marker_.try_emplace(epoch, t_us);
}

void Engine::finalize(RunResult& result) {
    // Account every signed certificate into exactly one outcome.
    uint64_t logged = 0, suppressed = 0, orphaned = 0, in_flight = 0;
    for (const auto& [key, record] : certs_) {
        if (record.logged) {
            ++logged;
        } else if (record.suppressed || record.owner == kOwnerAdversary) {
            ++suppressed;
        } else if (record.frozen_out || key.first < hsm_->epoch()) {
            ++orphaned;
        } else {
            ++in_flight;
        }
    }
    metrics_.certs_logged = logged;
    metrics_.certs_suppressed = suppressed;
    metrics_.certs_orphaned = orphaned;
    metrics_.certs_in_flight = in_flight;

    if (certs_.size() != hsm_->total_signed()) {
        violations_.push_back(
            "conservation: engine tracked " + std::to_string(certs_.size()) +
            " certificates but the device signed " +
            std::to_string(hsm_->total_signed()));
    }
    metrics_.certs_signed = hsm_->total_signed();
    if (logged != log_.total_logged()) {
        violations_.push_back("conservation: " + std::to_string(logged) +
                              " certificates marked logged but the log holds " +
                              std::to_string(log_.total_logged()));
    }
    if (logged + suppressed + orphaned + in_flight != metrics_.certs_signed) {
        violations_.push_back(
            "conservation: logged + suppressed + orphaned + in-flight != signed");
    }
    if (metrics_.certs_logged > metrics_.certs_signed) {
        violations_.push_back("more certificates logged than signed");
    }

    // Per-pass completions, chronological, each bounded by link capacity.
    uint32_t min_csr = 0;
    for (const auto& w : cfg_.workload) {
        if (min_csr == 0 || w.csr_bytes < min_csr) min_csr = w.csr_bytes;
    }
    if (min_csr == 0) min_csr = static_cast<uint32_t>(kDefaultCsrSize);
    metrics_.analytic_capacity = analytic_capacity(cfg_.link, min_csr);
    std::vector<std::tuple<uint64_t, size_t, uint64_t>> ordered;
    for (const auto& [key, count] : pass_completions_) {
        uint64_t start = stations_[key.first].offset_us +
                         key.second * uint64_t{cfg_.link.orbit_period_s} *
                             kMicrosPerSecond;
        ordered.emplace_back(start, key.first, count);
    }
    std::sort(ordered.begin(), ordered.end());
    for (const auto& [start, station, count] : ordered) {
        metrics_.requests_completed_per_pass.push_back(count);
        if (count > metrics_.analytic_capacity) {
            violations_.push_back(
                "capacity: station " + stations_[station].cfg.id +
                " completed " + std::to_string(count) +
                " requests in the pass starting at " + format_micros(start) +
                " but the link carries at most " +
                std::to_string(metrics_.analytic_capacity));
        }
    }

    metrics_.faults_detected = hsm_->faults_detected_total();
    metrics_.uplink_airtime_us = uplink_tx_.airtime_total_us();
    metrics_.downlink_airtime_us = down_tx_.airtime_total_us();
    metrics_.max_dod_percent = max_dod_;
    metrics_.min_charge_mws = battery_.min_charge_mws;
    metrics_.mean_completion_latency_s =
        metrics_.requests_completed == 0
            ? 0.0
            : static_cast<double>(completion_latency_total_us_) /
                  (1e6 * static_cast<double>(metrics_.requests_completed));

    result.metrics = metrics_;
    result.invariant_violations = violations_;
    result.alarms = result_alarms_;
    result.log_export = log_.export_text();
    result.events = std::move(events_);
}

// ---------------------------------------------------------------------------
// Run
// ---------------------------------------------------------------------------

RunResult Engine::run() {
    rng_.seed(cfg_.seed);
    uplink_tx_ = Transmitter(cfg_.link.uplink_bps, 1000);
    down_tx_ = Transmitter(cfg_.link.downlink_bps, cfg_.link.tx_duty_permille);
    adversary_tx_ = Transmitter(cfg_.link.downlink_bps, 1000);
    battery_ = BatteryState::full(cfg_.power);

    // Pre-launch provisioning: the ratchet seed is programmed into the
    // device and mirrored in the offline vault; stations receive epoch 0's
    // key; the device derives its signing identity from its own entropy.
    Digest ratchet_seed = tagged_digest(cfg_.seed, "ratchet-seed");
    PrgState initial = PrgState::from_seed(ratchet_seed);
    vault_ = OfflineVault{initial};
    Digest entropy = tagged_digest(cfg_.seed, "device-entropy");
    HsmConfig hsm_cfg;
    hsm_cfg.scheme = cfg_.hsm.scheme;
    hsm_cfg.fault_rate = cfg_.hsm.fault_rate;
    hsm_cfg.retry_limit = cfg_.hsm.retry_limit;
    auto boot = Hsm::bootstrap(entropy.view(), initial, hsm_cfg);
    hsm_.emplace(std::move(boot.first));
    bootstrap_beacon_ = std::move(boot.second);

    if (cfg_.peer_hsm) {
        Digest peer_entropy = tagged_digest(cfg_.seed, "peer-entropy");
        Digest peer_ratchet = tagged_digest(cfg_.seed, "peer-ratchet");
        auto peer = Hsm::bootstrap(peer_entropy.view(),
                                   PrgState::from_seed(peer_ratchet), hsm_cfg);
        Attestation att = peer.first.attest_peer(
            BytesView(hsm_->public_key().data(), hsm_->public_key().size()));
        attestation_payload_ = att.encode();
    }

    ChannelKey key0 = derive_key(initial).first;
    stations_.reserve(cfg_.stations.size());
    for (size_t k = 0; k < cfg_.stations.size(); ++k) {
        Station st;
        st.cfg = cfg_.stations[k];
        st.index = k;
        st.callsign = Callsign{st.cfg.id, 0};
        st.offset_us = uint64_t{st.cfg.pass_offset_s} * kMicrosPerSecond;
        st.key = key0;
        st.decrypt_keys.emplace(key0.epoch, key0.key);
        station_by_callsign_.emplace(st.callsign, k);
        stations_.push_back(std::move(st));
    }

    MonitorConfig mon_cfg;
    mon_cfg.grace_window_us =
        uint64_t{cfg_.ground.grace_window_s} * kMicrosPerSecond;
    mon_cfg.in_flight_grace_us =
        uint64_t{cfg_.ground.in_flight_grace_s} * kMicrosPerSecond;
    monitor_.emplace(mon_cfg);

    // Workload intake.
    requests_.resize(cfg_.workload.size());
    for (size_t i = 0; i < cfg_.workload.size(); ++i) {
        const WorkloadRequest& w = cfg_.workload[i];
        size_t station = 0;
        for (size_t k = 0; k < stations_.size(); ++k) {
            if (stations_[k].cfg.id == w.station) station = k;
        }
        Request& req = requests_[i];
        req.label = w.id;
        req.request_id = request_id_from_label("request-id:", w.id);
        CsrMessage csr;
        csr.subject = subject_of_size("request-subject:", w.id, w.csr_bytes);
        csr.request_id = req.request_id;
        csr.timestamp_us = w.time_us;
        req.csr_encoded = csr.encode();
        req.csr_bytes = w.csr_bytes;
        req.station = station;
        req.enqueued_us = w.time_us;
        request_by_id_.emplace(req.request_id, i);
        schedule(w.time_us, kRankStationBase + static_cast<uint32_t>(station),
                 [this, i, station] {
                     if (stopped_) return;
                     Request& r = requests_[i];
                     Station& st = stations_[station];
                     ++metrics_.requests_submitted;
                     JsonObject d;
                     d.str("station", st.cfg.id)
                         .str("label", r.label)
                         .str("request_id", hex16(r.request_id))
                         .num("csr_bytes", r.csr_bytes);
                     emit(st.cfg.id, "request_submitted", d);
                     r.in_txq = true;
                     st.txq.push_back(i);
                     r.claim_active = true;
                     auto id = r.request_id;
                     schedule(now_ + latency_us(), kRankGround, [this, id] {
                         if (!monitor_) return;
                         monitor_->add_claim(id);
                         JsonObject dd;
                         dd.str("action", "add")
                             .str("request_id", hex16(id))
                             .num("active_claims", monitor_->active_claims());
                         emit("monitor", "claim", dd);
                     });
                     if (!st.pump_at || *st.pump_at > now_) {
                         st.pump_at = now_;
                         schedule(now_,
                                  kRankStationBase + static_cast<uint32_t>(station),
                                  [this, station] { station_pump(station); });
                     }
                 });
    }

    for (const AdversaryAction& action : cfg_.adversary) {
        schedule(action.time_us, kRankAdversary,
                 [this, action] { adversary_action(action); });
    }

    schedule(0, kRankPower, [this] { power_tick(); });
    schedule(0, kRankSat, [this] { beacon_tick(); });

    while (!queue_.empty() && !stopped_) {
        Event ev = queue_.top();
        queue_.pop();
        if (ev.t > cfg_.duration_us) break;
        now_ = ev.t;
        ev.fn();
    }
    if (!stopped_) {
        now_ = cfg_.duration_us;
        advance_power(cfg_.duration_us - cfg_.duration_us % kMicrosPerSecond);
    }

    RunResult result;
    finalize(result);
    return result;
}

} // namespace

RunResult run_scenario(const ScenarioConfig& config) {
    Engine engine(config);
    return engine.run();
}

} // namespace spacehsm
