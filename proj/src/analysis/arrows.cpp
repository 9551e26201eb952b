#include "optit/analysis/arrows.hpp"

#include <cmath>

#include "optit/util/svg.hpp"

namespace optit::analysis {

namespace {

void fill_cell(OptionGrids& g, const nn::Model<float>& m, std::span<const float> obs,
               int cell) {
  std::vector<double> opt_logp, rho_logp;
  m.forward_policy(std::span<const float>(obs), opt_logp, rho_logp);
  for (int n = 0; n < m.num_options; ++n) {
    int best = 0;
    for (int a = 1; a < m.num_actions; ++a) {
      if (opt_logp[n * m.num_actions + a] > opt_logp[n * m.num_actions + best]) best = a;
    }
    g.options[n][cell] = {best, std::exp(opt_logp[n * m.num_actions + best])};
  }
  int bn = 0;
  for (int n = 1; n < m.num_options; ++n) {
    if (rho_logp[n] > rho_logp[bn]) bn = n;
  }
  g.rho[cell] = {bn, std::exp(rho_logp[bn])};
}

OptionGrids make_grids(const nn::Model<float>& m, int width, int height) {
  OptionGrids g;
  g.width = width;
  g.height = height;
  g.options.assign(m.num_options, std::vector<CellArrow>(width * height));
  g.rho.assign(width * height, {});
  return g;
}

}  // namespace

OptionGrids compass_option_grids(const nn::Model<float>& m, const env::CompassEnv& e) {
  const int w = e.width();
  OptionGrids g = make_grids(m, w, w);
  for (int y = 1; y < w - 1; ++y) {
    for (int x = 1; x < w - 1; ++x) {
      env::EnvState s = env::CompassEnv::make_state(x, y, 0);
      std::vector<float> obs = e.observe(s);
      fill_cell(g, m, obs, y * w + x);
    }
  }
  return g;
}

OptionGrids epm_option_grids(const nn::Model<float>& m, const env::ProcMazeEnv& e,
                             const env::EnvState& context) {
  const int w = e.width();
  OptionGrids g = make_grids(m, w, w);
  g.wall.resize(w * w);
  for (int c = 0; c < w * w; ++c) g.wall[c] = env::ProcMazeEnv::wall_at(context, c) ? 1 : 0;
  g.goal = env::ProcMazeEnv::goal_of(context);
  env::EnvState s = context;
  s.terminal = false;
  for (int c = 0; c < w * w; ++c) {
    if (c == g.goal) continue;
    s.w[0] = c;
    std::vector<float> obs = e.observe(s);
    fill_cell(g, m, obs, c);
  }
  return g;
}

OptionGrids hier_option_grids(const nn::Model<float>& m, const env::HierarchicalEnv& e,
                              const env::EnvState& context) {
  const int cw = e.controller_width();
  OptionGrids g = make_grids(m, cw, cw);
  env::EnvState base = e.base_state_of(context);
  base.terminal = false;
  for (int cy = 0; cy < cw; ++cy) {
    for (int cx = 0; cx < cw; ++cx) {
      env::EnvState s = e.make_state(base, cx, cy, e.selected_of(context),
                                     e.countdown_of(context));
      std::vector<float> obs = e.observe(s);
      fill_cell(g, m, obs, cy * cw + cx);
    }
  }
  for (int cy = 0; cy < cw; ++cy) {
    for (int cx = 0; cx < cw; ++cx) {
      int b = e.button_at(cx, cy);
      if (b >= 0) g.buttons.push_back({cy * cw + cx, b});
    }
  }
  return g;
}

void render_option_grids(const OptionGrids& g, const std::string& path,
                         const std::string& manifest) {
  const double cell = 26.0, pad = 18.0, title = 20.0;
  const int panels = static_cast<int>(g.options.size()) + 1;  // + rho panel
  const double pw = g.width * cell;
  const double ph = g.height * cell;
  SvgWriter svg(pad + panels * (pw + pad), title + ph + 2 * pad);
  if (!manifest.empty()) svg.comment("manifest: " + manifest);

  auto draw_panel = [&](int panel, const std::string& label) -> std::pair<double, double> {
    double ox = pad + panel * (pw + pad);
    double oy = title + pad;
    svg.text(ox, title, label, 12.0);
    for (int y = 0; y <= g.height; ++y)
      svg.line(ox, oy + y * cell, ox + pw, oy + y * cell, "#ccc", 0.5);
    for (int x = 0; x <= g.width; ++x)
      svg.line(ox + x * cell, oy, ox + x * cell, oy + ph, "#ccc", 0.5);
    for (int c = 0; c < g.width * g.height; ++c) {
      double cx = ox + (c % g.width) * cell;
      double cy = oy + (c / g.width) * cell;
      if (!g.wall.empty() && g.wall[c] != 0) svg.rect(cx, cy, cell, cell, "#555");
      if (c == g.goal) svg.rect(cx, cy, cell, cell, "#b6e3b6");
    }
    for (auto [c, action] : g.buttons) {
      double cx = ox + (c % g.width) * cell;
      double cy = oy + (c / g.width) * cell;
      svg.rect(cx + 1, cy + 1, cell - 2, cell - 2, "none", "#000", 2.0);
      (void)action;
    }
    return {ox, oy};
  };

  auto draw_arrow = [&](double ox, double oy, int c, const CellArrow& a,
                        const std::string& color) {
    if (a.action < 0) return;
    double cx = ox + (c % g.width) * cell + cell / 2;
    double cy = oy + (c / g.width) * cell + cell / 2;
    double len = 0.5 * cell * a.prob;
    double dx = env::kDx[a.action] * len;
    double dy = env::kDy[a.action] * len;
    svg.line(cx, cy, cx + dx, cy + dy, color, 1.6);
    // small head
    double hx = cx + dx, hy = cy + dy;
    double bx = -dx * 0.25, by = -dy * 0.25;
    svg.line(hx, hy, hx + bx + by * 0.6, hy + by - bx * 0.6, color, 1.2);
    svg.line(hx, hy, hx + bx - by * 0.6, hy + by + bx * 0.6, color, 1.2);
  };

  for (std::size_t n = 0; n < g.options.size(); ++n) {
    auto [ox, oy] = draw_panel(static_cast<int>(n), "option " + std::to_string(n));
    for (int c = 0; c < g.width * g.height; ++c)
      draw_arrow(ox, oy, c, g.options[n][c], "#1a7f37");
  }
  auto [ox, oy] = draw_panel(static_cast<int>(g.options.size()), "rho (modal option)");
  for (int c = 0; c < g.width * g.height; ++c) {
    const CellArrow& a = g.rho[c];
    if (a.prob <= 0) continue;
    double cx = ox + (c % g.width) * cell + cell / 2;
    double cy = oy + (c / g.width) * cell + cell / 2 + 4;
    svg.text(cx, cy, std::to_string(a.action), 10.0, "#7a3ca3", "middle");
  }
  svg.save(path);
}

}  // namespace optit::analysis
