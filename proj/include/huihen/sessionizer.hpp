// Gap-based session segmentation and fixed-size windowing.
//
// A raw session is a maximal run of events whose consecutive gaps are at most
// `gap_seconds` (a gap exactly equal to the threshold does not split). The
// window keeps the newest `max_sessions` sessions with at least `min_events`
// events, truncates each to its newest `max_events`, and records how many pad
// slots precede the real content. Pad slots are never materialized: the
// recurrent encoders skip them.
#pragma once

#include <algorithm>
#include <cstdint>
#include <span>
#include <vector>

#include "huihen/event_model.hpp"

namespace huihen {

struct SessionConfig {
  std::int64_t gap_seconds = 3600;
  std::size_t min_events = 3;
  std::size_t max_sessions = 50;
  std::size_t max_events = 25;
};

struct RawSession {
  std::vector<BehaviorEvent> events;
};

struct Session {
  std::vector<BehaviorEvent> events;
  // intervals[k] is the gap before events[k+1]; the first event has dt = 0.
  std::vector<std::int64_t> intervals;
  std::size_t pad_count = 0;
  std::int64_t session_start_ts = 0;

  std::int64_t dt(std::size_t k) const { return k == 0 ? 0 : intervals[k - 1]; }
};

struct SessionWindow {
  std::vector<Session> sessions;  // oldest -> newest
  std::size_t session_pad_count = 0;

  bool all_pad() const { return sessions.empty(); }
};

inline std::vector<RawSession> segment(std::span<const BehaviorEvent> events,
                                       std::int64_t gap_seconds) {
  std::vector<RawSession> out;
  for (std::size_t i = 0; i < events.size(); ++i) {
    if (i == 0 || events[i].ts - events[i - 1].ts > gap_seconds) out.emplace_back();
    out.back().events.push_back(events[i]);
  }
  return out;
}

inline SessionWindow build_window(std::span<const RawSession> raw, std::int64_t loan_ts,
                                  const SessionConfig& cfg) {
  // Drop post-application events, then the noise filter, newest first.
  std::vector<const RawSession*> kept_raw;
  std::vector<std::size_t> kept_len;
  for (std::size_t i = raw.size(); i-- > 0 && kept_raw.size() < cfg.max_sessions;) {
    const auto& ev = raw[i].events;
    const auto len = static_cast<std::size_t>(
        std::upper_bound(ev.begin(), ev.end(), loan_ts,
                         [](std::int64_t t, const BehaviorEvent& e) { return t < e.ts; }) -
        ev.begin());
    if (len < cfg.min_events) continue;
    kept_raw.push_back(&raw[i]);
    kept_len.push_back(len);
  }

  SessionWindow window;
  window.sessions.reserve(kept_raw.size());
  for (std::size_t k = kept_raw.size(); k-- > 0;) {
    const auto& ev = kept_raw[k]->events;
    const std::size_t len = kept_len[k];
    const std::size_t first = len > cfg.max_events ? len - cfg.max_events : 0;
    Session s;
    s.events.assign(ev.begin() + static_cast<std::ptrdiff_t>(first),
                    ev.begin() + static_cast<std::ptrdiff_t>(len));
    for (std::size_t j = 1; j < s.events.size(); ++j)
      s.intervals.push_back(s.events[j].ts - s.events[j - 1].ts);
    s.pad_count = cfg.max_events - s.events.size();
    s.session_start_ts = s.events.front().ts;
    window.sessions.push_back(std::move(s));
  }
  window.session_pad_count = cfg.max_sessions - window.sessions.size();
  return window;
}

inline SessionWindow sessionize(std::span<const BehaviorEvent> events, std::int64_t loan_ts,
                                const SessionConfig& cfg) {
  const auto raw = segment(events, cfg.gap_seconds);
  return build_window(raw, loan_ts, cfg);
}

}  // namespace huihen
