#include "dapes/sim.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace dapes::sim {

TimerId
Scheduler::at(double time, std::function<void()> fn)
{
  if (!(time >= m_now))
    throw DomainError("event scheduled in the past");
  auto id = ++m_seq;
  m_heap.push({time, id});
  m_live.emplace(id, std::move(fn));
  return id;
}

std::optional<double>
Scheduler::peekTime()
{
  while (!m_heap.empty() && !m_live.count(m_heap.top().seq))
    m_heap.pop();
  if (m_heap.empty())
    return std::nullopt;
  return m_heap.top().time;
}

bool
Scheduler::runNext()
{
  if (!peekTime())
    return false;
  auto e = m_heap.top();
  m_heap.pop();
  auto it = m_live.find(e.seq);
  auto fn = std::move(it->second);
  m_live.erase(it);
  m_now = e.time;
  ++m_executed;
  fn();
  return true;
}

// ---------------------------------------------------------------------------

double
distance(Vec2 a, Vec2 b) noexcept
{
  return std::hypot(a.x - b.x, a.y - b.y);
}

Mobility::Mobility(MobilityParams params)
  : m_params(params)
{
}

void
Mobility::redraw(MobileState& s, double now, Rng& rng) const
{
  s.speed = rng.uniform(m_params.speedMin, m_params.speedMax);
  s.heading = rng.uniform(0.0, 2 * std::numbers::pi);
  s.nextRedraw = now + m_params.redrawPeriod;
}

void
Mobility::reflect(MobileState& s) const
{
  const double w = m_params.arenaWidth;
  const double h = m_params.arenaHeight;
  // a single step never exceeds the arena, so one fold per axis suffices
  // unless the step is huge; loop to be safe
  for (int i = 0; i < 8 && (s.pos.x < 0 || s.pos.x > w); ++i) {
    s.pos.x = s.pos.x < 0 ? -s.pos.x : 2 * w - s.pos.x;
    s.heading = std::numbers::pi - s.heading;
  }
  for (int i = 0; i < 8 && (s.pos.y < 0 || s.pos.y > h); ++i) {
    s.pos.y = s.pos.y < 0 ? -s.pos.y : 2 * h - s.pos.y;
    s.heading = -s.heading;
  }
  s.pos.x = std::clamp(s.pos.x, 0.0, w);
  s.pos.y = std::clamp(s.pos.y, 0.0, h);
  s.heading = std::fmod(s.heading, 2 * std::numbers::pi);
  if (s.heading < 0)
    s.heading += 2 * std::numbers::pi;
}

void
Mobility::step(std::vector<MobileState>& nodes, double dt, double now, Rng& rng) const
{
  if (!(dt > 0))
    throw DomainError("mobility step requires dt > 0");
  for (auto& s : nodes) {
    if (!s.mobile)
      continue;
    if (now >= s.nextRedraw)
      redraw(s, now, rng);
    s.pos.x += s.speed * std::cos(s.heading) * dt;
    s.pos.y += s.speed * std::sin(s.heading) * dt;
    reflect(s);
  }
}

} // namespace dapes::sim
