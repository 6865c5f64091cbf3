// Copyright (c) 2026 The spacehsm Authors
// SPDX-License-Identifier: Apache-2.0
//
// Command line front end: run a mission scenario, verify a certificate
// against a transparency log export, or compute a link capacity bound.

#include <cstdint>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>

#include "CLI11.hpp"
#include "spacehsm/bytes.hpp"
#include "spacehsm/engine.hpp"
#include "spacehsm/ground.hpp"
#include "spacehsm/messages.hpp"
#include "spacehsm/scenario.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfigError = 1;
constexpr int kExitInvariantViolation = 2;

std::optional<std::string> read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) return std::nullopt;
    std::ostringstream out;
    out << in.rdbuf();
    return out.str();
}

bool write_file(const std::string& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    if (!out) return false;
    out << content;
    return static_cast<bool>(out);
}

std::string strip_whitespace(std::string_view s) {
    std::string out;
    for (char c : s) {
        if (c != ' ' && c != '\n' && c != '\r' && c != '\t') out += c;
    }
    return out;
}

std::optional<spacehsm::ScenarioConfig> load_config(const std::string& path) {
    auto text = read_file(path);
    if (!text) {
        std::cerr << "error: cannot read config file: " << path << "\n";
        return std::nullopt;
    }
    try {
        return spacehsm::parse_scenario(*text);
    } catch (const spacehsm::ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return std::nullopt;
    }
}

uint32_t capacity_request_bytes(const spacehsm::ScenarioConfig& config) {
    uint32_t min_csr = 0;
    for (const auto& w : config.workload) {
        if (min_csr == 0 || w.csr_bytes < min_csr) min_csr = w.csr_bytes;
    }
    if (min_csr == 0) min_csr = static_cast<uint32_t>(spacehsm::kDefaultCsrSize);
    return min_csr;
}

int cmd_run(const std::string& config_path, std::optional<uint64_t> seed,
            const std::string& events_out, const std::string& metrics_out,
            const std::string& log_out) {
    auto config = load_config(config_path);
    if (!config) return kExitConfigError;
    if (seed) config->seed = *seed;

    spacehsm::RunResult result = spacehsm::run_scenario(*config);

    if (!events_out.empty()) {
        std::string blob;
        for (const auto& line : result.events) {
            blob += line;
            blob += '\n';
        }
        if (!write_file(events_out, blob)) {
            std::cerr << "error: cannot write events file: " << events_out
                      << "\n";
            return kExitConfigError;
        }
    }
    if (!log_out.empty() && !write_file(log_out, result.log_export)) {
        std::cerr << "error: cannot write log export file: " << log_out << "\n";
        return kExitConfigError;
    }
    std::string metrics = result.metrics.to_json();
    if (metrics_out.empty()) {
        std::cout << metrics;
    } else if (!write_file(metrics_out, metrics)) {
        std::cerr << "error: cannot write metrics file: " << metrics_out << "\n";
        return kExitConfigError;
    }

    if (!result.invariant_violations.empty()) {
        for (const auto& v : result.invariant_violations) {
            std::cerr << "invariant violation: " << v << "\n";
        }
        return kExitInvariantViolation;
    }
    return kExitOk;
}

int cmd_verify(const std::string& log_path, const std::string& cert_path) {
    auto log_text = read_file(log_path);
    if (!log_text) {
        std::cerr << "error: cannot read log export: " << log_path << "\n";
        return kExitConfigError;
    }
    auto cert_text = read_file(cert_path);
    if (!cert_text) {
        std::cerr << "error: cannot read certificate: " << cert_path << "\n";
        return kExitConfigError;
    }
    auto server = spacehsm::LogServer::import_text(*log_text);
    if (!server) {
        std::cerr << "error: malformed log export\n";
        return kExitConfigError;
    }
    auto raw = spacehsm::base64_decode(strip_whitespace(*cert_text));
    if (!raw) {
        std::cerr << "error: certificate file is not valid base64\n";
        return kExitConfigError;
    }
    auto cert = spacehsm::SignedCertificate::decode(
        spacehsm::BytesView(raw->data(), raw->size()));
    if (!cert) {
        std::cerr << "error: malformed certificate\n";
        return kExitConfigError;
    }
    spacehsm::VerifyStatus status = spacehsm::verify_certificate(*cert, *server);
    std::cout << spacehsm::verify_status_name(status) << "\n";
    return status == spacehsm::VerifyStatus::Ok ? kExitOk : kExitConfigError;
}

int cmd_capacity(const std::string& config_path) {
    auto config = load_config(config_path);
    if (!config) return kExitConfigError;
    std::cout << spacehsm::analytic_capacity(config->link,
                                             capacity_request_bytes(*config))
              << "\n";
    return kExitOk;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"satellite certificate authority mission simulator"};
    app.require_subcommand(1);

    std::string config_path;
    std::string events_out;
    std::string metrics_out;
    std::string log_out;
    std::optional<uint64_t> seed;

    CLI::App* run = app.add_subcommand("run", "simulate a mission scenario");
    run->add_option("config", config_path, "scenario config (JSON)")
        ->required();
    run->add_option("--seed", seed, "override the scenario seed");
    run->add_option("--events-out", events_out, "write the event stream (JSONL)");
    run->add_option("--metrics-out", metrics_out,
                    "write metrics JSON here instead of stdout");
    run->add_option("--log-out", log_out,
                    "write the transparency log export (for `verify`)");

    std::string verify_log;
    std::string verify_cert;
    CLI::App* verify = app.add_subcommand(
        "verify", "check a certificate against a transparency log export");
    verify->add_option("log-export", verify_log, "log export file")->required();
    verify->add_option("cert", verify_cert, "certificate file (base64)")
        ->required();

    std::string capacity_config;
    CLI::App* capacity = app.add_subcommand(
        "capacity", "requests per pass the uplink can carry");
    capacity->add_option("config", capacity_config, "scenario config (JSON)")
        ->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int code = app.exit(e);
        return code == 0 ? kExitOk : kExitConfigError;
    }

    if (run->parsed()) {
        return cmd_run(config_path, seed, events_out, metrics_out, log_out);
    }
    if (verify->parsed()) return cmd_verify(verify_log, verify_cert);
    if (capacity->parsed()) return cmd_capacity(capacity_config);
    return kExitConfigError;
}
