#pragma once

// JSON documents: configs (sections device, source, link, security),
// observables, pool statistics, security reports, scenarios, the published-result
// fixtures and line-delimited transcripts.

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "tfqds/channel.hpp"
#include "tfqds/estimation.hpp"
#include "tfqds/harness.hpp"
#include "tfqds/params.hpp"
#include "tfqds/security.hpp"

namespace tfqds {

using Json = nlohmann::ordered_json;

Json load_json(const std::filesystem::path& path);

Json config_to_json(const LinkConfig& config);
// Unknown keys are rejected unless listed in extra_top_level.
LinkConfig config_from_json(const Json& doc, const std::vector<std::string>& extra_top_level = {});

Json observables_to_json(const LinkObservables& obs);
LinkObservables observables_from_json(const Json& doc);

Json pre_aopp_to_json(const PreAoppEstimates& pre);
Json pool_to_json(const PoolStats& pool);
// Reads the four post-AOPP values only.
PoolStats pool_from_json(const Json& doc);

Json report_to_json(const SecurityReport& report);
Json source_to_json(const SourceParams& source);

Json scenario_to_json(const Scenario& scenario);
Scenario scenario_from_json(const Json& doc);

// One JSON object per line: events in order, then verdicts, link reports, the
// security report and the abort record if any.
std::string transcript_to_jsonl(const Transcript& transcript);

// One published distance: the shared configuration, per-link observed counts and
// published post-AOPP values, and the published signature results.
struct Table2Fixture {
    std::string name;
    LinkConfig config;
    std::map<std::string, LinkObservables> links;  // "AB", "AC"
    std::map<std::string, PoolStats> post_aopp;
    std::map<std::string, double> published_n_1;
    std::map<std::string, double> published_e_ph;
    double L_single = 0, n1_L_single = 0, eph_L_single = 0, rate_single_bps = 0;
    double L_multi = 0, n1_L_multi = 0, eph_L_multi = 0, rate_multi_tps = 0;
    double message_bits = 1e6;
    // Literal n'_Z of the AB link as printed, when it differs from the value used.
    std::optional<double> printed_n_Z_prime_ab;
};

Table2Fixture fixture_from_json(const Json& doc);
// A bare name resolves to <data>/fixtures/<name>.json.
std::filesystem::path resolve_fixture(const std::string& name_or_path);
Table2Fixture load_fixture(const std::string& name_or_path);

}  // namespace tfqds
