#include <gtest/gtest.h>

#include <vector>

#include "huihen/rng.hpp"
#include "huihen/sessionizer.hpp"

using namespace huihen;

namespace {

std::vector<BehaviorEvent> stream(const std::vector<std::int64_t>& ts) {
  std::vector<BehaviorEvent> out;
  for (auto t : ts) {
    BehaviorEvent e;
    e.user_id = "u";
    e.ts = t;
    out.push_back(e);
  }
  return out;
}

std::vector<std::vector<std::int64_t>> times(const std::vector<RawSession>& raw) {
  std::vector<std::vector<std::int64_t>> out;
  for (const auto& s : raw) {
    out.emplace_back();
    for (const auto& e : s.events) out.back().push_back(e.ts);
  }
  return out;
}

// Stream of `n` sessions with the given lengths, separated by two hours.
std::vector<BehaviorEvent> sessions_of(const std::vector<std::size_t>& lengths) {
  std::vector<std::int64_t> ts;
  std::int64_t t = 0;
  for (auto len : lengths) {
    for (std::size_t k = 0; k < len; ++k) ts.push_back(t += 60);
    t += 7200;
  }
  return stream(ts);
}

}  // namespace

TEST(Segment, GapLargerThanThresholdSplits) {
  const auto ev = stream({0, 600, 7800, 7900});
  EXPECT_EQ(times(segment(ev, 3600)), (std::vector<std::vector<std::int64_t>>{{0, 600}, {7800, 7900}}));
}

TEST(Segment, GapEqualToThresholdStaysTogether) {
  EXPECT_EQ(segment(stream({0, 3600}), 3600).size(), 1u);
}

TEST(Segment, RegularStreamIsOneSession) {
  std::vector<std::int64_t> ts;
  for (int i = 0; i < 100; ++i) ts.push_back(60 * i);
  const auto raw = segment(stream(ts), 3600);
  ASSERT_EQ(raw.size(), 1u);
  EXPECT_EQ(raw[0].events.size(), 100u);
}

TEST(Segment, EmptyStream) { EXPECT_TRUE(segment(stream({}), 3600).empty()); }

TEST(Window, KeepsLatestFiftySessions) {
  const auto ev = sessions_of(std::vector<std::size_t>(60, 4));
  const auto w = sessionize(ev, ev.back().ts, SessionConfig{});
  ASSERT_EQ(w.sessions.size(), 50u);
  EXPECT_EQ(w.session_pad_count, 0u);
  EXPECT_EQ(w.sessions.back().events.back().ts, ev.back().ts);
  EXPECT_EQ(w.sessions.front().events.front().ts, ev[10 * 4].ts);
}

TEST(Window, ShortSessionsFiltered) {
  const auto ev = sessions_of({2, 3, 2});
  const auto w = sessionize(ev, ev.back().ts, SessionConfig{});
  ASSERT_EQ(w.sessions.size(), 1u);
  EXPECT_EQ(w.sessions[0].events.size(), 3u);
  EXPECT_EQ(w.session_pad_count, 49u);
}

TEST(Window, LongSessionTruncatedToNewest) {
  const auto ev = sessions_of({30, 10});
  const auto w = sessionize(ev, ev.back().ts, SessionConfig{});
  ASSERT_EQ(w.sessions.size(), 2u);
  EXPECT_EQ(w.sessions[0].events.size(), 25u);
  EXPECT_EQ(w.sessions[0].pad_count, 0u);
  EXPECT_EQ(w.sessions[0].events.front().ts, ev[5].ts);
  EXPECT_EQ(w.sessions[1].events.size(), 10u);
  EXPECT_EQ(w.sessions[1].pad_count, 15u);
}

TEST(Window, EventsAfterLoanDropped) {
  const auto ev = sessions_of({5, 5});
  const auto w = sessionize(ev, ev[6].ts, SessionConfig{});
  ASSERT_EQ(w.sessions.size(), 1u);
  EXPECT_EQ(w.sessions[0].events.size(), 5u);
}

TEST(Window, NoEventsIsAllPad) {
  const auto w = sessionize(stream({}), 100, SessionConfig{});
  EXPECT_TRUE(w.all_pad());
  EXPECT_EQ(w.session_pad_count, 50u);
}

TEST(Window, IntervalsAreConsecutiveGaps) {
  const auto ev = stream({10, 20, 50, 110});
  const auto w = sessionize(ev, 1000, SessionConfig{});
  ASSERT_EQ(w.sessions.size(), 1u);
  EXPECT_EQ(w.sessions[0].dt(0), 0);
  EXPECT_EQ(w.sessions[0].dt(1), 10);
  EXPECT_EQ(w.sessions[0].dt(3), 60);
}

TEST(WindowProperties, RandomStreamsSatisfyInvariants) {
  Rng rng(3);
  const SessionConfig cfg;
  for (int trial = 0; trial < 2000; ++trial) {
    std::vector<std::int64_t> ts;
    std::int64_t t = static_cast<std::int64_t>(rng.below(1000));
    const auto n = rng.below(400);
    for (std::uint64_t i = 0; i < n; ++i) {
      t += rng.bernoulli(0.1) ? static_cast<std::int64_t>(rng.range(3601, 90000))
                              : static_cast<std::int64_t>(rng.range(0, 3600));
      ts.push_back(t);
    }
    const auto ev = stream(ts);
    const std::int64_t loan = ts.empty() ? 0 : ts[rng.below(ts.size())];
    const auto w = sessionize(ev, loan, cfg);
    ASSERT_LE(w.sessions.size(), cfg.max_sessions);
    ASSERT_EQ(w.sessions.size() + w.session_pad_count, cfg.max_sessions);
    for (std::size_t s = 0; s < w.sessions.size(); ++s) {
      const auto& sess = w.sessions[s];
      ASSERT_GE(sess.events.size(), cfg.min_events);
      ASSERT_LE(sess.events.size(), cfg.max_events);
      ASSERT_EQ(sess.events.size() + sess.pad_count, cfg.max_events);
      for (std::size_t k = 1; k < sess.events.size(); ++k) {
        ASSERT_LE(sess.events[k].ts - sess.events[k - 1].ts, cfg.gap_seconds);
        ASSERT_EQ(sess.dt(k), sess.events[k].ts - sess.events[k - 1].ts);
      }
      ASSERT_LE(sess.events.back().ts, loan);
      if (s > 0) {
        ASSERT_GT(sess.events.front().ts - w.sessions[s - 1].events.back().ts, cfg.gap_seconds);
      }
    }
  }
}
