#include <boost/rational.hpp>

#include <algorithm>
#include <map>
#include <random>

#include "cesim/link_channel.hpp"
#include "doctest.h"

using namespace cesim;

namespace {

struct Job {
  std::uint64_t id;
  Time start;
  Fixed size;
};

// Exact processor-sharing replay in rationals: between consecutive events
// every active job drains bandwidth / k.
std::map<std::uint64_t, Ratio> fluid_oracle(std::vector<Job> jobs, Fixed bw) {
  std::sort(jobs.begin(), jobs.end(), [](const Job& a, const Job& b) { return a.start < b.start; });
  std::map<std::uint64_t, Ratio> remaining, done;
  Ratio now = jobs.front().start.to_ratio();
  std::size_t next = 0;
  Ratio rate = bw.to_ratio();
  while (next < jobs.size() || !remaining.empty()) {
    while (next < jobs.size() && jobs[next].start.to_ratio() <= now) {
      remaining[jobs[next].id] = jobs[next].size.to_ratio();
      ++next;
    }
    if (remaining.empty()) {
      now = jobs[next].start.to_ratio();
      continue;
    }
    Ratio k(static_cast<std::int64_t>(remaining.size()));
    Ratio least = std::min_element(remaining.begin(), remaining.end(), [](auto& a, auto& b) { return a.second < b.second; })->second;
    Ratio finish = now + least * k / rate;
    Ratio horizon = next < jobs.size() ? std::min(finish, jobs[next].start.to_ratio()) : finish;
    Ratio drained = (horizon - now) * rate / k;
    now = horizon;
    for (auto it = remaining.begin(); it != remaining.end();) {
      it->second -= drained;
      if (it->second <= Ratio(0)) {
        done[it->first] = now;
        it = remaining.erase(it);
      } else {
        ++it;
      }
    }
  }
  return done;
}

// Drives a LinkChannel the way the engine does.
std::map<std::uint64_t, Time> drive(std::vector<Job> jobs, Fixed bw) {
  std::sort(jobs.begin(), jobs.end(), [](const Job& a, const Job& b) { return a.start < b.start; });
  LinkChannel ch;
  std::map<std::uint64_t, Time> out;
  std::size_t next = 0;
  while (next < jobs.size() || ch.in_flight() > 0) {
    auto wake = ch.next_completion(bw);
    if (next < jobs.size() && (!wake || jobs[next].start <= *wake)) {
      ch.start(jobs[next].id, jobs[next].size, jobs[next].start, bw);
      ++next;
      continue;
    }
    for (const auto& t : ch.advance(*wake, bw)) out[t.id] = *wake;
  }
  return out;
}

}  // namespace

TEST_CASE("sole transfer serializes in size / bandwidth") {
  auto r = drive({{1, Time{}, Fixed::units(10)}}, Fixed::units(10));
  CHECK(r[1] == Time::units(1));
}

TEST_CASE("two simultaneous equal transfers share bandwidth") {
  auto r = drive({{1, Time{}, Fixed::units(10)}, {2, Time{}, Fixed::units(10)}}, Fixed::units(10));
  CHECK(r[1] == Time::units(2));
  CHECK(r[2] == Time::units(2));
}

TEST_CASE("late arrival slows the incumbent") {
  // A: 10 units from 0; B: 10 units from 0.5 at bw 10.
  // [0,0.5): A drains 5. Then both at 5/unit: A finishes at 1.5, B has 5 left -> 2.0.
  auto r = drive({{1, Time{}, Fixed::units(10)}, {2, Time::from_raw(500), Fixed::units(10)}}, Fixed::units(10));
  CHECK(r[1] == Time::from_raw(1500));
  CHECK(r[2] == Time::units(2));
}

TEST_CASE("property: channel completions match the exact fluid oracle to the tick grid") {
  std::mt19937_64 g(2024);
  std::uniform_int_distribution<int> n_jobs(1, 8), start(0, 20000), size(1, 40000), bw(1, 50);
  for (int trial = 0; trial < 300; ++trial) {
    std::vector<Job> jobs;
    int n = n_jobs(g);
    for (int i = 0; i < n; ++i) jobs.push_back({static_cast<std::uint64_t>(i), Time::from_raw(start(g)), Fixed::from_raw(size(g))});
    Fixed b = Fixed::units(bw(g));
    auto exact = fluid_oracle(jobs, b);
    auto got = drive(jobs, b);
    REQUIRE(got.size() == exact.size());
    for (auto& [id, t] : exact) {
      // Completion instants are rounded up to the next tick; rounding may
      // cascade once per overlapping transfer.
      Ratio diff = got[id].to_ratio() - t;
      CHECK(diff >= Ratio(-1, 1000) * static_cast<std::int64_t>(n));
      CHECK(diff <= Ratio(1, 1000) * static_cast<std::int64_t>(n));
    }
  }
}
