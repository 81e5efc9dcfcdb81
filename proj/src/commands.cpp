#include "gradflow/commands.hpp"

#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <mutex>
#include <numbers>
#include <ostream>
#include <sstream>
#include <thread>

#include "gradflow/analysis.hpp"
#include "gradflow/config.hpp"
#include "gradflow/cumulant.hpp"
#include "gradflow/flow.hpp"
#include "gradflow/measure.hpp"
#include "gradflow/svg.hpp"
#include "gradflow/trace.hpp"

namespace gradflow {
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write '" + path.string() + "'");
  out << text;
  if (!out) throw std::runtime_error("write failed for '" + path.string() + "'");
}

template <typename Fn>
void write_file(const fs::path& path, Fn&& fill) {
  std::ostringstream buf;
  fill(buf);
  write_text(path, buf.str());
}

std::string fmt17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string dash_for(std::string_view flow) {
  if (flow == "W") return "7,4";
  if (flow == "WFR") return "10,3,2,3";
  if (flow == "FR_exact") return "3,3";
  return "";
}

const char* kDotted = "1.5,3";

void report_config_error(const ConfigError& e, std::ostream& log) {
  log << "error: invalid config\n";
  for (const auto& p : e.problems()) log << "  - " << p << '\n';
}

ExperimentConfig load_with_options(const CommandOptions& options) {
  json overrides = json::object();
  if (options.force_cfl) overrides["force_cfl"] = true;
  return load_config(options.config, overrides);
}

fs::path prepare_output_dir(const CommandOptions& options, const ExperimentConfig& config) {
  const fs::path dir = options.out ? *options.out : fs::path(config.output_dir);
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec || !fs::is_directory(dir)) {
    throw ConfigError({"cannot create output directory '" + dir.string() + "'"});
  }
  return dir;
}

// Samples of the leading-order prediction (kappa_2 / 2) e^{-2t}.
Series leading_overlay(const CumulantTable& table, const std::string& init, double horizon,
                       double dt, const std::string& color) {
  Series s;
  s.label = "(\xce\xba\xe2\x82\x82/2)e^{-2t} " + init;
  s.color = color;
  s.dash = kDotted;
  const auto steps = static_cast<std::size_t>(std::llround(horizon / dt));
  for (std::size_t k = 0; k <= steps; ++k) {
    const double t = static_cast<double>(k) * dt;
    s.x.push_back(t);
    s.y.push_back(0.5 * table.kappa(2) * std::exp(-2.0 * t));
  }
  return s;
}

struct Job {
  FlowKind kind;
  std::size_t init;
};

struct JobResult {
  FlowTrace trace;
  std::string file;
  double wall_time = 0.0;
  std::optional<double> failed_at;
};

// A CSV with a header row of column names and numeric rows, optionally ended
// by a FAILED marker row.
struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<double>> rows;

  std::optional<std::size_t> column(const std::string& name) const {
    for (std::size_t i = 0; i < header.size(); ++i) {
      if (header[i] == name) return i;
    }
    return std::nullopt;
  }
};

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::stringstream ss(line);
  std::string cell;
  while (std::getline(ss, cell, ',')) out.push_back(cell);
  return out;
}

CsvTable read_numeric_csv(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw std::invalid_argument("cannot read '" + path.string() + "'");
  CsvTable table;
  std::string line;
  if (!std::getline(in, line) || line.empty()) {
    throw std::invalid_argument("'" + path.string() + "' has no header");
  }
  if (!line.empty() && line.back() == '\r') line.pop_back();
  table.header = split_csv(line);
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto cells = split_csv(line);
    if (cells[0] == "FAILED") break;
    if (cells.size() != table.header.size()) {
      throw std::invalid_argument(path.string() + ":" + std::to_string(line_no) +
                                  ": expected " + std::to_string(table.header.size()) + " fields");
    }
    std::vector<double> row;
    for (const auto& c : cells) {
      char* end = nullptr;
      const double v = std::strtod(c.c_str(), &end);
      if (end == c.c_str() || *end != '\0') {
        throw std::invalid_argument(path.string() + ":" + std::to_string(line_no) +
                                    ": non-numeric field '" + c + "'");
      }
      row.push_back(v);
    }
    table.rows.push_back(std::move(row));
  }
  return table;
}

}  // namespace

std::string sanitize_label(const std::string& label) {
  std::string out;
  for (char c : label) {
    const bool ok = (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9') ||
                    c == '-' || c == '_' || c == '.';
    out += ok ? c : '_';
  }
  return out.empty() ? "unnamed" : out;
}

std::string trace_file_name(std::string_view flow, const std::string& init) {
  return "trace_" + std::string(flow) + "_" + sanitize_label(init) + ".csv";
}

int cmd_run(const CommandOptions& options, std::ostream& log) {
  const auto started = Clock::now();
  ExperimentConfig config;
  fs::path dir;
  try {
    config = load_with_options(options);
    dir = prepare_output_dir(options, config);
  } catch (const ConfigError& e) {
    report_config_error(e, log);
    return kExitConfig;
  }

  std::vector<Job> jobs;
  for (std::size_t i = 0; i < config.inits.size(); ++i) {
    for (auto kind : config.flows) jobs.push_back({kind, i});
  }
  std::vector<JobResult> results(jobs.size());
  std::mutex log_mutex;
  std::atomic<std::size_t> next{0};

  auto worker = [&] {
    for (std::size_t j = next++; j < jobs.size(); j = next++) {
      const Job& job = jobs[j];
      const Potential& init = config.inits[job.init];
      JobResult& res = results[j];
      res.file = trace_file_name(to_string(job.kind), init.name());
      const auto t0 = Clock::now();
      try {
        res.trace = run(config.run_config(job.kind, init));
      } catch (const FlowRunError& e) {
        res.trace = e.partial();
        res.failed_at = e.time();
      } catch (const std::exception& e) {
        res.trace.meta.kind = std::string(to_string(job.kind));
        res.trace.meta.target = config.target.name();
        res.trace.meta.init = init.name();
        res.trace.failed = true;
        res.trace.failure = e.what();
        res.failed_at = 0.0;
      }
      res.wall_time = seconds_since(t0);
      std::string write_error;
      try {
        write_file(dir / res.file, [&](std::ostream& out) { write_csv(out, res.trace); });
      } catch (const std::exception& e) {
        write_error = e.what();
        res.trace.failed = true;
        if (res.trace.failure.empty()) res.trace.failure = write_error;
      }
      std::lock_guard lock(log_mutex);
      log << "[run] " << to_string(job.kind) << ' ' << init.name() << ": "
          << (res.trace.failed ? "FAILED (" + res.trace.failure + ")" : std::string("ok")) << ", "
          << res.trace.rows.size() << " rows, " << res.wall_time << " s\n";
    }
  };
  const std::size_t n_workers =
      std::max<std::size_t>(1, std::min<std::size_t>(options.workers > 0 ? options.workers : 1, jobs.size()));
  {
    std::vector<std::jthread> pool;
    for (std::size_t w = 1; w < n_workers; ++w) pool.emplace_back(worker);
    worker();
  }

  const Grid grid(config.n);
  const LogDensity pi = from_potential(config.target, grid);
  std::vector<CumulantTable> tables;
  for (const auto& init : config.inits) {
    tables.push_back(build_table(from_potential(init, grid), pi, config.cumulant_order));
  }

  json manifest;
  manifest["name"] = config.name;
  manifest["config_hash"] = config.hash();
  manifest["config_path"] = options.config.string();
  manifest["config"] = config.canonical();
  manifest["grid"] = {{"n", grid.size()}, {"h", grid.spacing()}, {"domain", {-std::numbers::pi, std::numbers::pi}}};
  manifest["target"] = config.target.name();
  manifest["pi_fingerprint"] = hex64(fingerprint(pi));
  manifest["workers"] = n_workers;
  manifest["runs"] = json::array();

  bool any_failed = false;
  std::vector<SlopeEntry> slopes;
  json slope_errors = json::array();
  json residuals = json::array();
  std::ostringstream residual_text;
  residual_text << "KL - (kappa_2/2)e^{-2t}, summary = max over t >= 3 of |residual| e^{3t}\n\n";

  for (std::size_t j = 0; j < jobs.size(); ++j) {
    const Job& job = jobs[j];
    const JobResult& res = results[j];
    const std::string flow(to_string(job.kind));
    const std::string& init = config.inits[job.init].name();
    any_failed = any_failed || res.trace.failed;

    json entry = {{"flow", flow},
                  {"init", init},
                  {"target", config.target.name()},
                  {"file", res.file},
                  {"status", res.trace.failed ? "failed" : "ok"},
                  {"rows", res.trace.rows.size()},
                  {"step_size", res.trace.meta.step_size},
                  {"horizon", config.horizon.at(job.kind)},
                  {"rho0_fingerprint", hex64(res.trace.meta.rho0_fingerprint)},
                  {"pi_fingerprint", hex64(res.trace.meta.pi_fingerprint)},
                  {"wall_time_seconds", res.wall_time}};
    if (res.trace.failed) {
      entry["failure"] = res.trace.failure;
      if (res.failed_at) entry["failed_at"] = *res.failed_at;
    }
    manifest["runs"].push_back(entry);
    if (res.trace.failed) continue;

    if (auto w = config.slope_windows.find(job.kind); w != config.slope_windows.end()) {
      try {
        slopes.push_back({config.target.name(), init, flow, slope(res.trace, w->second.t1, w->second.t2)});
      } catch (const std::exception& e) {
        slope_errors.push_back({{"flow", flow}, {"init", init}, {"error", e.what()}});
        log << "[run] slope " << flow << ' ' << init << ": " << e.what() << '\n';
      }
    }

    if (job.kind == FlowKind::kFR || job.kind == FlowKind::kFRExact) {
      const ResidualReport rep = theory_residual(res.trace, tables[job.init], 2);
      const std::string file = "residual_" + flow + "_" + sanitize_label(init) + ".csv";
      try {
        write_file(dir / file, [&](std::ostream& out) { write_residual_csv(out, rep); });
      } catch (const std::exception& e) {
        log << "error: " << e.what() << '\n';
        return kExitRuntime;
      }
      json r = {{"flow", flow}, {"init", init}, {"file", file}, {"order", rep.order}};
      r["summary"] = rep.summary ? json(*rep.summary) : json(nullptr);
      r["predicted_tail_bound"] = rep.predicted_tail_bound ? json(*rep.predicted_tail_bound) : json(nullptr);
      residuals.push_back(r);
      residual_text << flow << ' ' << init << ": summary = "
                    << (rep.summary ? fmt17(*rep.summary) : std::string("n/a (horizon < 3)"))
                    << ", predicted |kappa_3|/3 = "
                    << (rep.predicted_tail_bound ? fmt17(*rep.predicted_tail_bound) : std::string("n/a"))
                    << '\n';
    }
  }

  try {
    write_file(dir / "slopes.csv", [&](std::ostream& out) { write_slopes_csv(out, slopes); });
    std::string table = format_slope_table(slopes);
    for (const auto& e : slope_errors) {
      table += "\nslope unavailable for " + e["flow"].get<std::string>() + " " +
               e["init"].get<std::string>() + ": " + e["error"].get<std::string>();
    }
    write_text(dir / "slopes.txt", table + "\n");
    if (!residuals.empty()) write_text(dir / "residuals.txt", residual_text.str());

    std::vector<Series> curves;
    for (std::size_t j = 0; j < jobs.size(); ++j) {
      const auto& trace = results[j].trace;
      if (trace.rows.empty()) continue;
      Series s;
      s.label = trace.meta.kind + " " + trace.meta.init;
      s.color = palette_color(jobs[j].init);
      s.dash = dash_for(trace.meta.kind);
      for (const auto& row : trace.rows) {
        s.x.push_back(row.t);
        s.y.push_back(row.kl);
      }
      curves.push_back(std::move(s));
    }
    for (std::size_t i = 0; i < config.inits.size(); ++i) {
      if (tables[i].kappa(2) > 0.0) {
        curves.push_back(leading_overlay(tables[i], config.inits[i].name(), config.max_horizon(),
                                         config.record_dt, palette_color(i)));
      }
    }
    if (!curves.empty()) {
      PlotSpec spec{config.name + ": KL(\xcf\x81_t | \xcf\x80)", "t", "KL", true};
      try {
        write_text(dir / "kl.svg", render_svg(spec, curves));
        manifest["figure"] = "kl.svg";
      } catch (const std::invalid_argument& e) {
        log << "[run] no figure: " << e.what() << '\n';
      }
    }

    manifest["slopes"] = {{"csv", "slopes.csv"}, {"table", "slopes.txt"}, {"errors", slope_errors}};
    manifest["residuals"] = residuals;
    manifest["status"] = any_failed ? "failed" : "ok";
    manifest["wall_time_seconds"] = seconds_since(started);
    write_text(dir / "manifest.json", manifest.dump(2) + "\n");
  } catch (const std::exception& e) {
    log << "error: " << e.what() << '\n';
    return kExitRuntime;
  }

  log << format_slope_table(slopes) << '\n';
  log << "[run] wrote " << dir.string() << " (config " << config.hash() << ")\n";
  return any_failed ? kExitRuntime : kExitOk;
}

int cmd_predict(const CommandOptions& options, std::ostream& log) {
  ExperimentConfig config;
  fs::path dir;
  try {
    config = load_with_options(options);
    dir = prepare_output_dir(options, config);
  } catch (const ConfigError& e) {
    report_config_error(e, log);
    return kExitConfig;
  }

  try {
    const Grid grid(config.n);
    const LogDensity pi = from_potential(config.target, grid);
    const double horizon = config.max_horizon();
    const auto steps = static_cast<std::size_t>(std::llround(horizon / config.record_dt));
    const int order = config.cumulant_order;

    json report;
    report["name"] = config.name;
    report["config_hash"] = config.hash();
    report["target"] = config.target.name();
    report["alpha"] = config.alpha;
    report["inits"] = json::array();
    std::ostringstream text;
    text << "target " << config.target.name() << ", n = " << grid.size() << ", order " << order
         << ", alpha = " << config.alpha << "\n";

    for (const auto& init : config.inits) {
      const std::string label = sanitize_label(init.name());
      const LogDensity rho0 = from_potential(init, grid);
      const CumulantTable table = build_table(rho0, pi, order);
      const AssumptionReport diag = check_assumptions(rho0, pi, config.alpha);

      write_file(dir / ("cumulants_" + label + ".csv"), [&](std::ostream& out) { write_csv(out, table); });
      write_file(dir / ("prediction_" + label + ".csv"), [&](std::ostream& out) {
        out << "t,kl_leading,kl_series,kl_closed_form";
        for (double q : config.q_list) {
          const std::string col = renyi_column(q);
          out << ',' << col << "_leading," << col << "_series," << col << "_closed_form";
        }
        out << '\n';
        for (std::size_t k = 0; k <= steps; ++k) {
          const double t = static_cast<double>(k) * config.record_dt;
          const double tau = -std::expm1(-t);
          out << fmt17(t) << ',' << fmt17(kl_series(table, t, 2)) << ','
              << fmt17(kl_series(table, t, order)) << ',' << fmt17(kl_closed_form(table, tau));
          for (double q : config.q_list) {
            out << ',' << fmt17(renyi_series(table, q, t, 2)) << ','
                << fmt17(renyi_series(table, q, t, order)) << ','
                << fmt17(renyi_closed_form(table, q, tau));
          }
          out << '\n';
        }
      });

      json entry = {{"init", init.name()},
                    {"kappa_2", table.kappa(2)},
                    {"kappas", std::vector<double>(table.kappas().begin(), table.kappas().end())},
                    {"cumulants_csv", "cumulants_" + label + ".csv"},
                    {"prediction_csv", "prediction_" + label + ".csv"},
                    {"rho0_fingerprint", hex64(fingerprint(rho0))},
                    {"pi_fingerprint", hex64(fingerprint(pi))},
                    {"A1", {{"pi_entropy", diag.pi_entropy}, {"holds", diag.a1_holds}}},
                    {"A2", {{"log_margin", diag.a2_log_margin}, {"holds", diag.a2_holds}}},
                    {"B", {{"M", diag.b_constant}}}};
      report["inits"].push_back(entry);

      char line[512];
      std::snprintf(line, sizeof line,
                    "\n%s\n  kappa_2 = %.10g  (KL ~ %.6g e^{-2t})\n"
                    "  (A1) entropy of pi = %.10g  %s\n"
                    "  (A2) min log(rho0 / pi^(1+alpha)) = %.10g  %s\n"
                    "  (B)  M = -min log(rho0/pi) = %.10g\n",
                    init.name().c_str(), table.kappa(2), 0.5 * table.kappa(2), diag.pi_entropy,
                    diag.a1_holds ? "holds" : "FAILS", diag.a2_log_margin,
                    diag.a2_holds ? "holds" : "FAILS", diag.b_constant);
      text << line;
      text << "  kappa_1..kappa_" << order << ":";
      for (double k : table.kappas()) text << ' ' << fmt17(k);
      text << '\n';
    }
    write_text(dir / "predict.json", report.dump(2) + "\n");
    write_text(dir / "predict.txt", text.str());
    log << text.str();
  } catch (const ConfigError& e) {
    report_config_error(e, log);
    return kExitConfig;
  } catch (const std::exception& e) {
    log << "error: " << e.what() << '\n';
    return kExitRuntime;
  }
  return kExitOk;
}

int cmd_plot(const PlotOptions& options, std::ostream& log) {
  try {
    std::vector<Series> curves;
    PlotSpec spec;
    spec.title = options.title;

    if (options.energy) {
      if (!options.config) throw std::invalid_argument("energy plots need --config");
      const ExperimentConfig config = load_config(*options.config);
      const Grid grid(config.n);
      const auto xs = grid.points();
      auto add = [&](const Potential& p, std::size_t color, const std::string& dash) {
        const auto v = p.eval(grid);
        Series s{p.name(), {xs.begin(), xs.end()}, {v.begin(), v.end()}, palette_color(color), dash};
        curves.push_back(std::move(s));
      };
      add(config.target, 0, "");
      for (std::size_t i = 0; i < config.inits.size(); ++i) add(config.inits[i], i + 1, "6,4");
      spec.x_label = "x";
      spec.y_label = "V(x)";
      spec.log_y = false;
      if (spec.title.empty()) spec.title = config.name + ": energies";
    } else {
      if (options.inputs.empty()) throw std::invalid_argument("no input files");
      spec.log_y = true;
      spec.y_label = options.column;
      std::map<std::string, std::size_t> colors;
      auto color_for = [&](const std::string& key) {
        auto [it, inserted] = colors.emplace(key, colors.size());
        return palette_color(it->second);
      };
      for (const auto& path : options.inputs) {
        const CsvTable table = read_numeric_csv(path);
        if (table.rows.empty()) throw std::invalid_argument("'" + path.string() + "' has no data rows");
        const auto tcol = table.column("t");
        if (!tcol) throw std::invalid_argument("'" + path.string() + "' has no 't' column");

        const bool prediction = table.column("kl_leading").has_value();
        const std::string ycol_name = prediction ? options.column + "_leading" : options.column;
        const auto ycol = table.column(ycol_name);
        if (!ycol) {
          throw std::invalid_argument("'" + path.string() + "' has no '" + ycol_name + "' column");
        }

        Series s;
        for (const auto& row : table.rows) {
          s.x.push_back(row[*tcol]);
          s.y.push_back(row[*ycol]);
        }
        const std::string stem = path.stem().string();
        if (prediction) {
          const std::string init = stem.rfind("prediction_", 0) == 0 ? stem.substr(11) : stem;
          s.label = "(\xce\xba\xe2\x82\x82/2)e^{-2t} " + init;
          s.color = color_for(init);
          s.dash = kDotted;
        } else {
          s.label = stem;
          std::string color_key = stem;
          const fs::path manifest_path = path.parent_path() / "manifest.json";
          std::ifstream in(manifest_path);
          if (in) {
            const json manifest = json::parse(in, nullptr, false);
            if (manifest.is_object() && manifest.contains("runs")) {
              for (const auto& run : manifest["runs"]) {
                if (run.value("file", "") != path.filename().string()) continue;
                const std::string flow = run.value("flow", "");
                const std::string init = run.value("init", "");
                s.label = flow + " " + init;
                color_key = init;
                s.dash = dash_for(flow);
              }
            }
          }
          s.color = color_for(color_key);
        }
        curves.push_back(std::move(s));
      }
    }

    const std::string svg = render_svg(spec, curves);
    if (options.out.has_parent_path()) fs::create_directories(options.out.parent_path());
    write_text(options.out, svg);
    log << "[plot] wrote " << options.out.string() << '\n';
  } catch (const ConfigError& e) {
    report_config_error(e, log);
    return kExitConfig;
  } catch (const std::exception& e) {
    log << "error: " << e.what() << '\n';
    return kExitConfig;
  }
  return kExitOk;
}

}  // namespace gradflow
