#include "tap3/audit_log.hpp"

#include <cinttypes>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>

namespace tap3 {

namespace {

void write_lines(const std::string& path, const std::string& header,
                 const std::vector<std::string>& rows) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw ArtifactError("cannot write '" + path + "'");
  if (!header.empty()) f << header << "\n";
  for (const auto& r : rows) f << r << "\n";
  if (!f) throw ArtifactError("write failed for '" + path + "'");
}

template <typename T>
std::string join(const std::vector<T>& v, char sep) {
  if (v.empty()) return "-";
  std::string out;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) out += sep;
    out += std::to_string(v[i]);
  }
  return out;
}

std::string hexfloat(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%a", v);
  return buf;
}

Pseudonym alias_from_hex(const std::string& hex) {
  auto bytes = from_hex(hex);
  if (!bytes || bytes->size() != kDigestSize) throw ArtifactError("bad alias '" + hex + "'");
  Pseudonym p;
  std::copy(bytes->begin(), bytes->end(), p.digest.begin());
  return p;
}

std::vector<std::uint64_t> parse_list(const std::string& s) {
  std::vector<std::uint64_t> out;
  if (s == "-") return out;
  std::istringstream in(s);
  std::string item;
  while (std::getline(in, item, ',')) out.push_back(std::stoull(item));
  return out;
}

}  // namespace

std::string audit_evidence_text(const RunResult& result) {
  std::ostringstream o;
  o << "# tap3 audit evidence v1\n";
  o << "nodes " << result.logs.size() << "\n";
  for (std::size_t n = 0; n < result.logs.size(); ++n) {
    const NodeLog& log = result.logs[n];
    o << "log " << n << " " << log.alias().hex() << " " << log.size() << "\n";
    for (const auto& e : log.entries()) {
      o << "e " << e.packet_id << " " << static_cast<unsigned>(e.event) << " " << e.sseq << " "
        << e.oseq << " " << e.dseq << " " << e.prev_hop_alias.hex() << " "
        << hexfloat(e.timestamp) << "\n";
    }
  }
  for (const auto& a : result.audits) {
    std::vector<std::string> pub;
    for (const auto& [node, size] : a.published) {
      pub.push_back(std::to_string(node) + ":" + std::to_string(size));
    }
    std::string published = pub.empty() ? "-" : "";
    for (std::size_t i = 0; i < pub.size(); ++i) published += (i ? "," : "") + pub[i];
    o << "audit " << hexfloat(a.time) << " " << a.source << " " << a.flow_id << " "
      << a.destination << " " << join(a.relays, ',') << " " << join(a.tau_c, ',') << " "
      << published << " " << audit_report_row(a.flow_id, a.report) << "\n";
  }
  return o.str();
}

void write_trace_files(const RunResult& result, const std::string& trace_path) {
  write_lines(trace_path, trace_csv_header(), result.trace_rows);
  {
    std::ofstream f(trace_path + ".audit", std::ios::binary);
    if (!f) throw ArtifactError("cannot write '" + trace_path + ".audit'");
    f << audit_evidence_text(result);
  }
  write_lines(trace_path + ".reports", "flow_id,verdict,active_pos,passive_positions",
              result.report_rows);
  write_lines(trace_path + ".verdicts", "node_id,sseq,oseq,dseq_delta,distance,threshold,label",
              result.verdict_rows);
}

ReplaySummary replay_audit_text(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  std::vector<NodeLog> logs;
  std::optional<std::size_t> current;
  ReplaySummary summary;
  std::size_t lineno = 0;
  auto bad = [&](const std::string& why) {
    throw ArtifactError("evidence line " + std::to_string(lineno) + ": " + why);
  };

  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty() || line[0] == '#') continue;
    std::istringstream ls(line);
    std::string tag;
    ls >> tag;
    if (tag == "nodes") {
      std::size_t n = 0;
      if (!(ls >> n)) bad("bad node count");
      logs.reserve(n);
    } else if (tag == "log") {
      std::size_t node = 0, count = 0;
      std::string alias;
      if (!(ls >> node >> alias >> count) || node != logs.size()) bad("bad log header");
      logs.emplace_back(alias_from_hex(alias));
      current = logs.size() - 1;
    } else if (tag == "e") {
      if (!current) bad("entry before log header");
      LogEntry e;
      unsigned ev = 0;
      std::string prev, ts;
      if (!(ls >> e.packet_id >> ev >> e.sseq >> e.oseq >> e.dseq >> prev >> ts)) bad("bad entry");
      if (ev < 1 || ev > 4) bad("bad event");
      NodeLog& log = logs[*current];
      e.node_alias = log.alias();
      e.event = static_cast<LogEvent>(ev);
      e.prev_hop_alias = alias_from_hex(prev);
      e.timestamp = std::strtod(ts.c_str(), nullptr);
      if (!log.try_append(e)) bad("entry rejected by the log");
    } else if (tag == "audit") {
      std::string time, relays, tau, published, recorded;
      NodeId source = 0, dest = 0;
      std::uint64_t flow = 0;
      if (!(ls >> time >> source >> flow >> dest >> relays >> tau >> published >> recorded)) {
        bad("bad audit record");
      }
      if (source >= logs.size() || dest >= logs.size()) bad("audit names an unknown node");
      std::map<NodeId, std::size_t> sizes;
      if (published != "-") {
        std::istringstream ps(published);
        std::string item;
        while (std::getline(ps, item, ',')) {
          const auto colon = item.find(':');
          if (colon == std::string::npos) bad("bad published size");
          sizes[static_cast<NodeId>(std::stoul(item.substr(0, colon)))] =
              std::stoull(item.substr(colon + 1));
        }
      }
      auto party = [&](NodeId n) {
        if (n >= logs.size()) bad("audit names an unknown node");
        const NodeLog& l = logs[n];
        const std::size_t size = sizes.contains(n) ? sizes[n] : l.size();
        return AuditParty{l.alias(), &l, l.root_at(size), size};
      };
      std::vector<AuditParty> route;
      std::vector<Pseudonym> aliases;
      for (auto r : parse_list(relays)) {
        route.push_back(party(static_cast<NodeId>(r)));
        aliases.push_back(logs[r].alias());
      }
      const AuditParty destination = party(dest);
      std::vector<LogEntry> tau_c;
      for (auto i : parse_list(tau)) {
        if (i >= logs[source].size()) bad("tau_c index out of range");
        tau_c.push_back(logs[source].entries()[i]);
      }
      const RuleBook rules = standard_rules(logs[source].alias(), aliases, destination.alias, tau_c);
      const auto tau_d = collect_destination_evidence(destination, tau_c);
      const AuditReport report = audit_route(route, destination, tau_c, tau_d, rules);
      const std::string row = audit_report_row(flow, report);
      ++summary.audits;
      if (row != recorded) ++summary.mismatches;
      summary.rows.push_back(row);
    } else {
      bad("unknown record '" + tag + "'");
    }
  }
  return summary;
}

ReplaySummary replay_audits(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  std::string text;
  if (f) {
    std::ostringstream buf;
    buf << f.rdbuf();
    text = buf.str();
  }
  if (!f || text.rfind("# tap3 audit evidence", 0) != 0) {
    std::ifstream side(path + ".audit", std::ios::binary);
    if (!side) throw ArtifactError("no audit evidence at '" + path + "' or '" + path + ".audit'");
    std::ostringstream buf;
    buf << side.rdbuf();
    text = buf.str();
  }
  return replay_audit_text(text);
}

}  // namespace tap3
