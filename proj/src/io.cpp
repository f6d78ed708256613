#include "tfqds/io.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace tfqds {

Json load_json(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ValidationError("cannot read '" + path.string() + "'");
    try {
        return Json::parse(in);
    } catch (const Json::parse_error& e) {
        throw ValidationError("'" + path.string() + "' is not valid JSON: " + e.what());
    }
}

namespace {

void reject_unknown(const Json& obj, const std::string& where, const std::vector<std::string>& known) {
    if (!obj.is_object()) throw ValidationError(where + " must be an object");
    for (const auto& [key, value] : obj.items())
        if (std::find(known.begin(), known.end(), key) == known.end())
            throw ValidationError("unknown key '" + (where.empty() ? key : where + "." + key) + "'");
}

template <typename T>
void read(const Json& obj, const std::string& where, const char* key, T& into) {
    if (!obj.contains(key)) return;
    const Json& v = obj.at(key);
    if constexpr (std::is_same_v<T, std::uint64_t>) {
        if (v.is_number_unsigned()) into = v.get<std::uint64_t>();
        else if (v.is_number() && v.get<double>() >= 0.0 && v.get<double>() == std::floor(v.get<double>()))
            into = static_cast<std::uint64_t>(v.get<double>());
        else throw ValidationError(where + "." + key + " must be a non-negative integer");
    } else if constexpr (std::is_same_v<T, int>) {
        if (!v.is_number_integer()) throw ValidationError(where + "." + key + " must be an integer");
        into = v.get<int>();
    } else {
        if (!v.is_number()) throw ValidationError(where + "." + key + " must be a number");
        into = v.get<double>();
    }
}

const std::vector<std::string> kConfigSections = {"device", "source", "link", "security"};

}  // namespace

Json config_to_json(const LinkConfig& c) {
    Json j;
    const auto& d = c.device;
    j["device"] = {{"detector_efficiency", d.detector_efficiency}, {"dark_count_prob", d.dark_count_prob},
                   {"misalignment", d.misalignment},               {"phase_slices", d.phase_slices},
                   {"fiber_attenuation", d.fiber_attenuation},     {"clock_rate", d.clock_rate},
                   {"duty_cycle", d.duty_cycle}};
    j["source"] = source_to_json(c.source_a);
    j["link"] = {{"fiber_length_km", c.fiber_length_km}};
    const auto& b = c.budget;
    j["security"] = {{"epsilon_total", b.epsilon_total}, {"eps_p", b.eps_p},       {"eps_aopp", b.eps_aopp},
                     {"eps_pe", b.eps_pe},               {"g", b.g},               {"eps_cor", b.eps_cor},
                     {"eps_prime", b.eps_prime},         {"ec_efficiency", b.ec_efficiency}};
    return j;
}

Json source_to_json(const SourceParams& s) {
    return {{"signal_intensity", s.signal_intensity},
            {"decoy_intensity", s.decoy_intensity},
            {"prob_vacuum", s.prob_vacuum},
            {"prob_decoy", s.prob_decoy},
            {"prob_signal_window_send", s.prob_signal_window_send},
            {"total_pulses", s.total_pulses}};
}

LinkConfig config_from_json(const Json& doc, const std::vector<std::string>& extra_top_level) {
    std::vector<std::string> top = kConfigSections;
    top.insert(top.end(), extra_top_level.begin(), extra_top_level.end());
    reject_unknown(doc, "", top);
    LinkConfig c;
    if (doc.contains("device")) {
        const Json& d = doc.at("device");
        reject_unknown(d, "device",
                       {"detector_efficiency", "dark_count_prob", "misalignment", "phase_slices", "fiber_attenuation",
                        "clock_rate", "duty_cycle"});
        read(d, "device", "detector_efficiency", c.device.detector_efficiency);
        read(d, "device", "dark_count_prob", c.device.dark_count_prob);
        read(d, "device", "misalignment", c.device.misalignment);
        read(d, "device", "phase_slices", c.device.phase_slices);
        read(d, "device", "fiber_attenuation", c.device.fiber_attenuation);
        read(d, "device", "clock_rate", c.device.clock_rate);
        read(d, "device", "duty_cycle", c.device.duty_cycle);
    }
    if (doc.contains("source")) {
        const Json& s = doc.at("source");
        reject_unknown(s, "source",
                       {"signal_intensity", "decoy_intensity", "prob_vacuum", "prob_decoy", "prob_signal_window_send",
                        "total_pulses"});
        read(s, "source", "signal_intensity", c.source_a.signal_intensity);
        read(s, "source", "decoy_intensity", c.source_a.decoy_intensity);
        read(s, "source", "prob_vacuum", c.source_a.prob_vacuum);
        read(s, "source", "prob_decoy", c.source_a.prob_decoy);
        read(s, "source", "prob_signal_window_send", c.source_a.prob_signal_window_send);
        read(s, "source", "total_pulses", c.source_a.total_pulses);
        c.source_b = c.source_a;
    }
    if (doc.contains("link")) {
        reject_unknown(doc.at("link"), "link", {"fiber_length_km"});
        read(doc.at("link"), "link", "fiber_length_km", c.fiber_length_km);
    }
    if (doc.contains("security")) {
        const Json& b = doc.at("security");
        reject_unknown(b, "security",
                       {"epsilon_total", "eps_p", "eps_aopp", "eps_pe", "g", "eps_cor", "eps_prime", "ec_efficiency"});
        read(b, "security", "epsilon_total", c.budget.epsilon_total);
        read(b, "security", "eps_p", c.budget.eps_p);
        read(b, "security", "eps_aopp", c.budget.eps_aopp);
        read(b, "security", "eps_pe", c.budget.eps_pe);
        read(b, "security", "g", c.budget.g);
        read(b, "security", "eps_cor", c.budget.eps_cor);
        read(b, "security", "eps_prime", c.budget.eps_prime);
        read(b, "security", "ec_efficiency", c.budget.ec_efficiency);
    }
    return c;
}

namespace {

struct ObsField {
    const char* name;
    double LinkObservables::*member;
};

constexpr ObsField kObsFields[] = {
    {"n_oo", &LinkObservables::n_oo},       {"n_ov", &LinkObservables::n_ov},
    {"n_vo", &LinkObservables::n_vo},       {"n_ou", &LinkObservables::n_ou},
    {"n_uo", &LinkObservables::n_uo},       {"m_vv", &LinkObservables::m_vv},
    {"n_vv_total", &LinkObservables::n_vv_total}, {"n_Z", &LinkObservables::n_Z},
    {"E_Z", &LinkObservables::E_Z},         {"n_g", &LinkObservables::n_g},
    {"n_odd", &LinkObservables::n_odd},     {"n_Z_prime", &LinkObservables::n_Z_prime},
    {"E_Z_prime", &LinkObservables::E_Z_prime}, {"duration_s", &LinkObservables::duration_s},
};

}  // namespace

Json observables_to_json(const LinkObservables& obs) {
    Json j = Json::object();
    for (const auto& f : kObsFields) j[f.name] = obs.*f.member;
    return j;
}

LinkObservables observables_from_json(const Json& doc) {
    std::vector<std::string> known;
    for (const auto& f : kObsFields) known.emplace_back(f.name);
    reject_unknown(doc, "observables", known);
    LinkObservables obs;
    for (const auto& f : kObsFields) {
        read(doc, "observables", f.name, obs.*f.member);
        if (obs.*f.member < 0.0) throw ValidationError(std::string("observables.") + f.name + " must be >= 0");
    }
    if (obs.E_Z > 1.0) throw ValidationError("observables.E_Z must be <= 1");
    if (obs.E_Z_prime > 1.0) throw ValidationError("observables.E_Z_prime must be <= 1");
    return obs;
}

Json pre_aopp_to_json(const PreAoppEstimates& p) {
    return {{"n_X1", p.n_X1},     {"e_ph", p.e_ph},     {"n_u0", p.n_u0},
            {"n_u1", p.n_u1},     {"n_1", p.n_1},       {"tau_X1", p.tau_X1},
            {"tau_Z1", p.tau_Z1}, {"clamped", p.clamped}};
}

namespace {

Json budget_entries(const std::vector<BudgetEntry>& entries) {
    Json a = Json::array();
    for (const auto& e : entries) a.push_back({{"label", e.label}, {"probability", e.probability}});
    return a;
}

}  // namespace

Json pool_to_json(const PoolStats& p) {
    return {{"n_Z_prime", p.n_Z_prime},
            {"E_Z_prime", p.E_Z_prime},
            {"n_1_prime", p.n_1_prime},
            {"e_ph_prime", p.e_ph_prime},
            {"degenerate", p.degenerate},
            {"h", p.h},
            {"n_1_L", p.n_1_L},
            {"n_1_r", p.n_1_r},
            {"r", p.r},
            {"e_T", p.e_T},
            {"M_S_U", p.M_S_U},
            {"failure_budget_consumed", budget_entries(p.failure_budget_consumed)},
            {"failure_total", p.failure_total()}};
}

PoolStats pool_from_json(const Json& doc) {
    // audit fields written by pool_to_json are accepted and ignored
    reject_unknown(doc, "pool",
                   {"n_Z_prime", "E_Z_prime", "n_1_prime", "e_ph_prime", "note", "degenerate", "h", "n_1_L", "n_1_r",
                    "r", "e_T", "M_S_U", "failure_budget_consumed", "failure_total"});
    double nz = 0, ez = 0, n1 = 0, eph = 0;
    read(doc, "pool", "n_Z_prime", nz);
    read(doc, "pool", "E_Z_prime", ez);
    read(doc, "pool", "n_1_prime", n1);
    read(doc, "pool", "e_ph_prime", eph);
    return pool_from_values(nz, ez, n1, eph);
}

Json report_to_json(const SecurityReport& r) {
    Json j = {{"scheme", to_string(r.scheme)},
              {"L", r.L},
              {"message_bits", r.message_bits},
              {"eps_rob", r.eps_rob},
              {"eps_rep", r.eps_rep},
              {"eps_forge", r.eps_forge},
              {"eps_achieved", r.eps_achieved},
              {"H_L", r.H_L},
              {"n1_L", r.subset.n1_L},
              {"eph_L", r.subset.eph_L}};
    if (r.thresholds)
        j["thresholds"] = {{"P_e", r.thresholds->P_e}, {"s_a", r.thresholds->s_a}, {"s_v", r.thresholds->s_v}};
    if (r.scheme == Scheme::single_bit) j["eps_forge_literal"] = r.eps_forge_literal;
    j["flags"] = r.flags;
    j["failure_budget"] = budget_entries(r.failure_budget);
    return j;
}

Json scenario_to_json(const Scenario& s) {
    Json j = config_to_json(s.link_ab);
    if (!(s.link_ac == s.link_ab)) j["link_ac"] = config_to_json(s.link_ac);
    j["scenario"] = {{"scheme", to_string(s.scheme)},
                     {"message", to_string(BitView(s.message))},
                     {"desk_scale_N", s.desk_scale_N},
                     {"seed", s.seed},
                     {"error_test_fraction", s.error_test_fraction}};
    j["attack"] = {{"type", to_string(s.attack)}};
    return j;
}

Scenario scenario_from_json(const Json& doc) {
    Scenario s = desk_scenario(Scheme::multi_bit, 1);
    // an absent section keeps the desk default rather than the full-scale one
    Json base = config_to_json(s.link_ab);
    for (const auto& section : kConfigSections)
        if (doc.contains(section)) {
            if (!doc.at(section).is_object()) throw ValidationError(section + " must be an object");
            for (const auto& [k, v] : doc.at(section).items()) base[section][k] = v;
        }
    reject_unknown(doc, "", {"device", "source", "link", "security", "link_ac", "scenario", "attack"});
    s.link_ab = config_from_json(base);
    s.link_ac = doc.contains("link_ac") ? config_from_json(doc.at("link_ac")) : s.link_ab;

    bool message_given = false;
    if (doc.contains("scenario")) {
        const Json& sc = doc.at("scenario");
        reject_unknown(sc, "scenario", {"scheme", "message", "desk_scale_N", "seed", "error_test_fraction"});
        if (sc.contains("scheme")) {
            if (!sc.at("scheme").is_string()) throw ValidationError("scenario.scheme must be a string");
            try {
                s.scheme = scheme_from_string(sc.at("scheme").get<std::string>());
            } catch (const std::invalid_argument& e) {
                throw ValidationError(std::string("scenario.scheme: ") + e.what());
            }
        }
        if (sc.contains("message")) {
            if (!sc.at("message").is_string()) throw ValidationError("scenario.message must be a string of 0/1");
            try {
                s.message = from_string(sc.at("message").get<std::string>());
            } catch (const std::invalid_argument& e) {
                throw ValidationError(std::string("scenario.message: ") + e.what());
            }
            message_given = true;
        }
        read(sc, "scenario", "desk_scale_N", s.desk_scale_N);
        read(sc, "scenario", "seed", s.seed);
        read(sc, "scenario", "error_test_fraction", s.error_test_fraction);
    }
    if (!message_given) s.message = desk_scenario(s.scheme, s.seed).message;
    if (doc.contains("attack")) {
        reject_unknown(doc.at("attack"), "attack", {"type"});
        if (doc.at("attack").contains("type")) {
            try {
                s.attack = attack_from_string(doc.at("attack").at("type").get<std::string>());
            } catch (const std::exception& e) {
                throw ValidationError(std::string("attack.type: ") + e.what());
            }
        }
    }
    return s;
}

std::string transcript_to_jsonl(const Transcript& t) {
    std::ostringstream out;
    auto line = [&](const Json& j) { out << j.dump() << '\n'; };
    for (const auto& e : t.events) {
        char digest[17];
        std::snprintf(digest, sizeof digest, "%016llx", static_cast<unsigned long long>(e.digest));
        Json j = {{"kind", "event"},
                  {"seq", e.seq},
                  {"sender", e.sender},
                  {"receiver", e.receiver},
                  {"channel", to_string(e.channel)},
                  {"type", e.type},
                  {"digest", digest},
                  {"size_bits", e.size_bits},
                  {"key_material", e.key_material}};
        if (!e.note.empty()) j["note"] = e.note;
        line(j);
    }
    for (const auto& v : t.verdicts)
        line({{"kind", "verdict"},
              {"verifier", v.verifier},
              {"accept", v.accept},
              {"reason", v.reason},
              {"mismatches", v.mismatches}});
    for (const auto& l : t.links) {
        Json j = {{"kind", "link_report"},
                  {"link", l.link},
                  {"observables", observables_to_json(l.observables)},
                  {"pre_aopp", pre_aopp_to_json(l.pre)},
                  {"error_test_sample", l.error_test_sample},
                  {"error_test_errors", l.error_test_errors},
                  {"pool_bits", l.pool_bits}};
        if (l.pool) j["pool"] = pool_to_json(*l.pool);
        line(j);
    }
    if (t.security) {
        Json j = report_to_json(*t.security);
        j["kind"] = "security_report";
        line(j);
    }
    if (t.aborted) line({{"kind", "abort"}, {"reason", t.abort_reason}});
    return out.str();
}

// ---------------------------------------------------------------- fixtures

namespace {

double number(const Json& obj, const std::string& where, const char* key) {
    if (!obj.contains(key) || !obj.at(key).is_number()) throw ValidationError(where + "." + key + " must be a number");
    return obj.at(key).get<double>();
}

}  // namespace

Table2Fixture fixture_from_json(const Json& doc) {
    reject_unknown(doc, "", {"name", "note", "device", "source", "link", "security", "links", "post_aopp", "published"});
    Table2Fixture f;
    f.name = doc.value("name", std::string{});
    Json cfg = Json::object();
    for (const auto& section : kConfigSections)
        if (doc.contains(section)) cfg[section] = doc.at(section);
    f.config = config_from_json(cfg);
    if (!doc.contains("links") || !doc.at("links").is_object()) throw ValidationError("fixture.links must be an object");
    for (const auto& [name, obs] : doc.at("links").items()) f.links[name] = observables_from_json(obs);
    if (doc.contains("post_aopp"))
        for (const auto& [name, p] : doc.at("post_aopp").items()) {
            f.post_aopp[name] = pool_from_json(p);
        }
    if (doc.contains("published")) {
        const Json& p = doc.at("published");
        if (p.contains("n_1"))
            for (const auto& [k, v] : p.at("n_1").items()) f.published_n_1[k] = v.get<double>();
        if (p.contains("e_ph"))
            for (const auto& [k, v] : p.at("e_ph").items()) f.published_e_ph[k] = v.get<double>();
        f.L_single = number(p, "published", "L_single");
        f.n1_L_single = number(p, "published", "n1_L_single");
        f.eph_L_single = number(p, "published", "eph_L_single");
        f.rate_single_bps = number(p, "published", "rate_single_bps");
        f.L_multi = number(p, "published", "L_multi");
        f.n1_L_multi = number(p, "published", "n1_L_multi");
        f.eph_L_multi = number(p, "published", "eph_L_multi");
        f.rate_multi_tps = number(p, "published", "rate_multi_tps");
        if (p.contains("message_bits")) f.message_bits = number(p, "published", "message_bits");
        if (p.contains("printed_n_Z_prime_AB")) f.printed_n_Z_prime_ab = number(p, "published", "printed_n_Z_prime_AB");
    }
    return f;
}

std::filesystem::path resolve_fixture(const std::string& name_or_path) {
    std::filesystem::path p(name_or_path);
    if (std::filesystem::exists(p)) return p;
    std::filesystem::path candidate = std::filesystem::path(TFQDS_DATA_DIR) / "fixtures" / (name_or_path + ".json");
    if (std::filesystem::exists(candidate)) return candidate;
    throw ValidationError("fixture '" + name_or_path + "' not found");
}

Table2Fixture load_fixture(const std::string& name_or_path) {
    return fixture_from_json(load_json(resolve_fixture(name_or_path)));
}

}  // namespace tfqds
