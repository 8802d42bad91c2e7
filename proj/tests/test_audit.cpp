#include <algorithm>
#include <random>
#include <optional>
#include <set>
#include <vector>

#include "doctest.h"
#include "route_fixture.hpp"
#include "tap3/log_audit.hpp"

using namespace tap3;
using namespace tap3::testing;

TEST_CASE("patterns treat unset fields as wildcards") {
  LogEntry e;
  e.node_alias = alias(1);
  e.packet_id = 9;
  e.event = LogEvent::Forwarded;
  Pattern p;
  CHECK(p.matches(e));
  p.events = Pattern::bit(LogEvent::Forwarded) | Pattern::bit(LogEvent::Dropped);
  CHECK(p.matches(e));
  p.packet_id = 8;
  CHECK_FALSE(p.matches(e));
  CHECK(exact_pattern(e).matches(e));
}

TEST_CASE("logs reject duplicates and time running backwards") {
  NodeLog l(alias(1));
  LogEntry e;
  e.node_alias = l.alias();
  e.packet_id = 1;
  e.timestamp = 2;
  l.append(e);
  CHECK_THROWS_AS(l.append(e), LogError);
  e.packet_id = 2;
  e.timestamp = 1;
  CHECK_THROWS_AS(append_log(l, e), LogError);
  CHECK_FALSE(l.try_append(e));
  CHECK(l.size() == 1);
}

TEST_CASE("rules fire only when every premise is observed") {
  const Pattern a = [] { Pattern p; p.packet_id = 1; return p; }();
  const Pattern b = [] { Pattern p; p.packet_id = 2; return p; }();
  const Pattern c = [] { Pattern p; p.packet_id = 3; return p; }();
  const std::vector<Rule> rules{{{a, b}, c}, {{a}, c}, {{b}, a}};
  LogEntry e1;
  e1.packet_id = 1;
  const std::vector<LogEntry> seen{e1};
  const auto out = apply_rules(rules, seen);
  REQUIRE(out.size() == 1);
  CHECK(out[0] == c);
}

TEST_CASE("honest routes audit clean: 100 random scenarios") {
  std::mt19937_64 rng(31);
  for (int trial = 0; trial < 100; ++trial) {
    RouteFixture f(rng() % 7);
    f.honest_reply();
    const std::size_t packets = 1 + rng() % 20;
    for (std::size_t p = 0; p < packets; ++p) {
      // Some packets die on a broken link and are logged as such.
      const std::size_t stop = (f.n > 0 && rng() % 4 == 0) ? 1 + rng() % f.n : 0;
      f.data(100 + p, stop);
    }
    const auto report = f.audit();
    CHECK(report.verdict == Fellowship::Fellow);
    CHECK_FALSE(report.active);
    CHECK(report.passive.empty());
  }
}

TEST_CASE("active forger is located exactly on routes of 3 to 8 relays") {
  int cases = 0;
  for (std::size_t n = 3; n <= 8; ++n) {
    for (std::size_t k = 1; k <= n + 1; ++k) {
      for (int variant = 0; variant < 3; ++variant) {
        RouteFixture f(n);
        // Hops behind the forger (towards D) carried the genuine reply; hops in
        // front of it carried the forgery.
        std::vector<std::optional<std::int64_t>> seen(n);
        for (std::size_t i = 1; i <= n; ++i) {
          if (i < k) seen[i - 1] = kForged;
          if (i > k) seen[i - 1] = kGenuine;
        }
        if (k <= n) {
          if (variant == 1) seen[k - 1] = kGenuine;  // logs what it received, not what it sent
          f.reply(kGenuine, seen, kForged);
          if (variant == 2) {
            LogEntry e;
            e.node_alias = f.relays[k - 1].alias();
            e.packet_id = kRrep;
            e.event = LogEvent::Dropped;
            e.dseq = kForged;
            e.timestamp = f.t += 0.001;
            f.relays[k - 1].append(e);
          }
        } else {
          // The destination logged one value and sent another.
          f.reply(kGenuine + variant, seen, kForged);
        }
        f.data(500);
        const auto report = f.audit();
        CHECK(report.verdict == Fellowship::NotFellow);
        REQUIRE(report.active);
        CHECK(report.active->attacker_position == k);
        CHECK(report.active->target == (k == n + 1));
        CHECK(report.passive.empty());
        ++cases;
      }
    }
  }
  CHECK(cases == 3 * (4 + 5 + 6 + 7 + 8 + 9));
}

TEST_CASE("single silent dropper is enumerated on routes up to 6 relays") {
  std::mt19937_64 rng(17);
  for (std::size_t n = 1; n <= 6; ++n) {
    for (std::size_t j = 1; j <= n; ++j) {
      RouteFixture f(n);
      f.honest_reply();
      std::uint64_t pid = 100;
      f.data(pid++, j, true);
      for (int p = 0; p < 8; ++p) {
        const auto r = rng() % 4;
        f.data(pid++, r == 0 ? j : 0, true);
      }
      const auto report = f.audit();
      CHECK(report.verdict == Fellowship::Fellow);
      CHECK(report.passive == std::vector<std::size_t>{j});
    }
  }
}

TEST_CASE("dropper pairs are both enumerated on routes up to 6 relays") {
  std::mt19937_64 rng(19);
  for (std::size_t n = 2; n <= 6; ++n) {
    for (std::size_t a = 1; a <= n; ++a) {
      for (std::size_t b = a + 1; b <= n; ++b) {
        RouteFixture f(n);
        f.honest_reply();
        std::uint64_t pid = 100;
        f.data(pid++, a, true);
        f.data(pid++, b, true);
        for (int p = 0; p < 6; ++p) {
          const auto r = rng() % 5;
          const std::size_t stop = r == 0 ? a : (r == 1 ? b : (r == 2 ? 1 + rng() % n : 0));
          // Honest relays on this route log their link losses.
          const bool silent = stop == a || stop == b;
          f.data(pid++, stop, silent);
        }
        const auto report = f.audit();
        CHECK(report.verdict == Fellowship::Fellow);
        CHECK(report.passive == std::vector<std::size_t>{a, b});
      }
    }
  }
}

TEST_CASE("a relay that doctors its log entries is accused") {
  RouteFixture f(4);
  f.honest_reply();
  f.data(100);
  f.data(101);
  // Relay 3 edits a committed entry after publishing.
  const AuditParty before = publish(f.relays[2]);
  auto doctored = f.relays[2].entries().back();
  doctored.packet_id ^= 0x5a5a5a5a00000000ull;
  f.relays[2].tamper(f.relays[2].size() - 1, doctored);

  std::vector<AuditParty> route;
  std::vector<Pseudonym> aliases;
  for (std::size_t i = 0; i < 4; ++i) {
    route.push_back(i == 2 ? before : publish(f.relays[i]));
    aliases.push_back(f.relays[i].alias());
  }
  const AuditParty d = publish(f.dest);
  const auto& tau_c = f.source.entries();
  const auto rules = standard_rules(f.source.alias(), aliases, d.alias, tau_c);
  const auto report = audit_route(route, d, tau_c, collect_destination_evidence(d, tau_c), rules);
  CHECK(report.passive == std::vector<std::size_t>{3});
}

TEST_CASE("missing commitments fail verification") {
  RouteFixture f(2);
  f.honest_reply();
  f.data(100);
  const AuditParty absent{f.dest.alias(), nullptr, {}, 0};
  std::vector<Pseudonym> aliases{f.relays[0].alias(), f.relays[1].alias()};
  const auto rules = standard_rules(f.source.alias(), aliases, absent.alias, f.source.entries());
  CHECK(check_destination(f.source.entries(), rules.to_destination, absent) == Fellowship::NotFellow);
  CHECK_THROWS_AS(detect_active_attacker({}, f.source.entries(), rules.to_intermediaries), AuditError);
}

TEST_CASE("report rows") {
  AuditReport r;
  CHECK(audit_report_row(3, r) == "3,FELLOW,,");
  r.passive = {2, 4};
  CHECK(audit_report_row(3, r) == "3,FELLOW,,2;4");
  AuditReport a;
  a.verdict = Fellowship::NotFellow;
  a.active = ActiveDetection{false, 2, 1};
  CHECK(audit_report_row(7, a) == "7,NOT_FELLOW,2,");
  a.active = ActiveDetection{true, 4, 3};
  CHECK(audit_report_row(7, a) == "7,NOT_FELLOW,target,");
}
