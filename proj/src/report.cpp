#include "gpusched/report.hpp"

#include <fstream>
#include <iostream>
#include <ostream>
#include <string>

#include "gpusched/errors.hpp"

namespace gpusched {

using nlohmann::json;

const std::vector<std::string>& csv_columns() {
    static const std::vector<std::string> kColumns = {
        "config_label", "policy",      "n_contexts",   "n_streams",    "oversubscription", "seed",
        "jps",          "dmr_hp",      "dmr_lp",       "resp_hp_mean", "resp_hp_p95",      "resp_lp_mean",
        "resp_lp_p95",  "accepted_hp", "accepted_lp",  "rejected_hp",  "rejected_lp",
    };
    return kColumns;
}

void write_csv(std::ostream& out, std::span<const MetricsReport> reports) {
    const auto& cols = csv_columns();
    for (std::size_t i = 0; i < cols.size(); ++i) out << (i ? "," : "") << cols[i];
    out << '\n';
    for (const auto& r : reports) {
        out << r.config_label << ',' << to_string(r.policy) << ',' << r.n_contexts << ',' << r.n_streams << ','
            << format_number(r.oversubscription) << ',' << r.seed << ',' << format_number(r.jps) << ','
            << format_number(r.dmr_hp) << ',' << format_number(r.dmr_lp) << ',' << format_number(r.response_hp.mean)
            << ',' << format_number(r.response_hp.p95) << ',' << format_number(r.response_lp.mean) << ','
            << format_number(r.response_lp.p95) << ',' << r.hp.accepted << ',' << r.lp.accepted << ','
            << r.hp.rejected << ',' << r.lp.rejected << '\n';
    }
}

namespace {

json stats_json(const ResponseStats& s) {
    return json{{"mean", s.mean}, {"min", s.min}, {"max", s.max}, {"p95", s.p95}};
}

ResponseStats stats_from(const json& j) {
    return {j.at("mean").get<double>(), j.at("min").get<double>(), j.at("max").get<double>(), j.at("p95").get<double>()};
}

json counts_json(const ClassCounts& c) {
    return json{{"released", c.released}, {"accepted", c.accepted}, {"rejected", c.rejected},
                {"completed", c.completed}, {"missed", c.missed}};
}

ClassCounts counts_from(const json& j) {
    return {j.at("released").get<std::uint64_t>(), j.at("accepted").get<std::uint64_t>(),
            j.at("rejected").get<std::uint64_t>(), j.at("completed").get<std::uint64_t>(),
            j.at("missed").get<std::uint64_t>()};
}

}  // namespace

json report_to_json(const MetricsReport& r) {
    json j;
    j["config_label"] = r.config_label;
    j["policy"] = to_string(r.policy);
    j["n_contexts"] = r.n_contexts;
    j["n_streams"] = r.n_streams;
    j["oversubscription"] = r.oversubscription;
    j["seed"] = r.seed;
    j["jps"] = r.jps;
    j["dmr_hp"] = r.dmr_hp;
    j["dmr_lp"] = r.dmr_lp;
    j["response_hp"] = stats_json(r.response_hp);
    j["response_lp"] = stats_json(r.response_lp);
    j["hp"] = counts_json(r.hp);
    j["lp"] = counts_json(r.lp);
    return j;
}

MetricsReport report_from_json(const json& j) {
    try {
        MetricsReport r;
        r.config_label = j.at("config_label").get<std::string>();
        r.policy = policy_from_string(j.at("policy").get<std::string>());
        r.n_contexts = j.at("n_contexts").get<int>();
        r.n_streams = j.at("n_streams").get<int>();
        r.oversubscription = j.at("oversubscription").get<double>();
        r.seed = j.at("seed").get<std::uint64_t>();
        r.jps = j.at("jps").get<double>();
        r.dmr_hp = j.at("dmr_hp").get<double>();
        r.dmr_lp = j.at("dmr_lp").get<double>();
        r.response_hp = stats_from(j.at("response_hp"));
        r.response_lp = stats_from(j.at("response_lp"));
        r.hp = counts_from(j.at("hp"));
        r.lp = counts_from(j.at("lp"));
        return r;
    } catch (const json::exception& e) {
        throw ParseError(std::string("report: ") + e.what());
    }
}

void write_json(std::ostream& out, std::span<const MetricsReport> reports) {
    json arr = json::array();
    for (const auto& r : reports) arr.push_back(report_to_json(r));
    out << arr.dump(2) << '\n';
}

std::vector<MetricsReport> read_json_reports(std::istream& in) {
    json doc;
    try {
        doc = json::parse(in);
    } catch (const json::parse_error& e) {
        throw ParseError(e.what());
    }
    if (!doc.is_array()) throw ParseError("report document must be an array");
    std::vector<MetricsReport> out;
    for (const auto& j : doc) out.push_back(report_from_json(j));
    return out;
}

void emit_report(std::span<const MetricsReport> reports, ReportFormat format, const std::string& path) {
    auto write = [&](std::ostream& out) {
        if (format == ReportFormat::Csv) write_csv(out, reports);
        else write_json(out, reports);
    };
    if (path.empty() || path == "-") {
        write(std::cout);
        std::cout.flush();
        return;
    }
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write report to '" + path + "'");
    write(out);
    if (!out) throw IoError("failed writing report to '" + path + "'");
}

}  // namespace gpusched
