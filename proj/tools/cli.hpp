#pragma once

#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "spn/spn.hpp"

namespace spn::cli {

enum ExitCode : int { kOk = 0, kUsage = 1, kModel = 2, kData = 3 };

namespace detail {

struct usage_error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

inline std::string extension(const std::string& path) {
  std::string ext = std::filesystem::path(path).extension().string();
  for (char& c : ext) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return ext;
}

inline std::string read_file(const std::string& path, bool is_model) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    if (is_model) throw model_error("cannot open model file '" + path + "'");
    throw data_error("cannot open file '" + path + "'");
  }
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline void write_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw usage_error("cannot write '" + path + "'");
  out << text;
  if (!out) throw usage_error("failed writing '" + path + "'");
}

inline Network load_model(const std::string& path) {
  const std::string ext = extension(path);
  if (ext == ".spn") return parse_dsl(read_file(path, true));
  if (ext == ".json") return from_json(read_file(path, true));
  throw usage_error("model file '" + path + "' must end in .spn or .json");
}

inline void save_model(const std::string& path, const Network& net) {
  const std::string ext = extension(path);
  if (ext == ".spn")
    write_file(path, print_dsl(net));
  else if (ext == ".json")
    write_file(path, to_json(net));
  else
    throw usage_error("output model '" + path + "' must end in .spn or .json");
}

inline void print_report(const ValidityReport& report, std::ostream& os) {
  for (const auto& v : report.violations)
    os << "node " << v.node.value << ": " << to_string(v.kind) << ": " << v.message << '\n';
}

}  // namespace detail

/// Runs one CLI invocation. argv[0] is the program name.
inline int run(int argc, const char* const* argv, std::istream& in, std::ostream& out, std::ostream& err) {
  CLI::App app{"Sum-product network toolkit"};
  app.require_subcommand(1);
  app.fallthrough();
  int precision = 6;
  bool header = false;
  app.add_option("--precision", precision, "Decimals for printed numbers")->check(CLI::Range(0, 17));
  app.add_flag("--header", header, "CSV inputs start with a header row");

  std::string model, data_path, out_path, context_path;
  std::uint64_t seed = 0;
  std::size_t replicas = 1, epochs = 100, min_instances = 200, clusters = 2;
  double lr = 0.05, threshold = 0.3;
  std::optional<std::size_t> label;
  bool with_main = false;
  std::string fn_name = "spn_loglik";

  auto* validate_cmd = app.add_subcommand("validate", "Check a model and print violations");
  validate_cmd->add_option("MODEL", model)->required();

  auto* eval_cmd = app.add_subcommand("eval", "Print one log-likelihood per data row");
  eval_cmd->add_option("MODEL", model)->required();
  eval_cmd->add_option("--data", data_path, "CSV file or - for stdin")->required();

  auto* mpe_cmd = app.add_subcommand("mpe", "Complete missing cells with the approximate MPE");
  mpe_cmd->add_option("MODEL", model)->required();
  mpe_cmd->add_option("--data", data_path)->required();

  auto* sample_cmd = app.add_subcommand("sample", "Fill missing cells by conditional sampling");
  sample_cmd->add_option("MODEL", model)->required();
  sample_cmd->add_option("--data", data_path)->required();
  sample_cmd->add_option("--seed", seed)->required();
  sample_cmd->add_option("-n", replicas, "Copies of each template row")->check(CLI::PositiveNumber);

  auto* learn_cmd = app.add_subcommand("learn", "Learn a structure from complete data");
  learn_cmd->add_option("--data", data_path)->required();
  learn_cmd->add_option("--context", context_path, "JSON list of column types")->required();
  learn_cmd->add_option("--classifier-label", label, "Learn a classifier over this label column");
  learn_cmd->add_option("--min-instances", min_instances)->check(CLI::PositiveNumber);
  learn_cmd->add_option("--threshold", threshold)->check(CLI::Range(0.0, 1.0));
  learn_cmd->add_option("--clusters", clusters)->check(CLI::Range(std::size_t{2}, std::size_t{1000}));
  learn_cmd->add_option("--seed", seed)->required();
  learn_cmd->add_option("--out", out_path)->required();

  auto* optimize_cmd = app.add_subcommand("optimize", "Gradient ascent on the train log-likelihood");
  optimize_cmd->add_option("MODEL", model)->required();
  optimize_cmd->add_option("--data", data_path)->required();
  optimize_cmd->add_option("--epochs", epochs)->required();
  optimize_cmd->add_option("--lr", lr)->required()->check(CLI::PositiveNumber);
  optimize_cmd->add_option("--out", out_path)->required();

  auto* compile_cmd = app.add_subcommand("compile", "Emit a C99 log-likelihood evaluator");
  compile_cmd->add_option("MODEL", model)->required();
  compile_cmd->add_option("--out", out_path)->required();
  compile_cmd->add_flag("--main", with_main, "Add a main() reading CSV rows from stdin");
  compile_cmd->add_option("--name", fn_name, "Name of the emitted function");

  auto* plot_cmd = app.add_subcommand("plot", "Write a Graphviz DOT rendering");
  plot_cmd->add_option("MODEL", model)->required();
  plot_cmd->add_option("--out", out_path)->required();

  auto* stats_cmd = app.add_subcommand("stats", "Print structure statistics");
  stats_cmd->add_option("MODEL", model)->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << '\n';
    return kUsage;
  }

  const auto read_data = [&]() {
    if (data_path == "-") return read_csv(in, header);
    return read_csv_file(data_path, header);
  };

  try {
    if (learn_cmd->parsed()) {
      const DataMatrix data = read_data();
      Context ctx = context_from_json(detail::read_file(context_path, true));
      ctx.add_domains(data);
      LearnHyperparams hp;
      hp.min_instances = min_instances;
      hp.dependence_threshold = threshold;
      hp.cluster_count = clusters;
      hp.seed = seed;
      const Network net = label ? learn_classifier(data, ctx, *label, hp) : learn_structure(data, ctx, hp);
      detail::save_model(out_path, net);
      return kOk;
    }

    const Network net = detail::load_model(model);
    const ValidityReport report = validate(net);
    if (validate_cmd->parsed()) {
      if (report.ok()) {
        out << "ok\n";
        return kOk;
      }
      detail::print_report(report, out);
      return kModel;
    }
    if (!report.ok()) {
      err << "error: model '" << model << "' is not a valid network\n";
      detail::print_report(report, err);
      return kModel;
    }

    if (eval_cmd->parsed()) {
      for (double ll : log_likelihood(net, read_data())) out << format_fixed(ll, precision) << '\n';
    } else if (mpe_cmd->parsed()) {
      write_csv(out, mpe(net, read_data()), precision);
    } else if (sample_cmd->parsed()) {
      const DataMatrix tmpl = read_data();
      DataMatrix expanded;
      for (std::size_t r = 0; r < tmpl.rows(); ++r)
        for (std::size_t k = 0; k < replicas; ++k) expanded.append_row(tmpl.row(r));
      RandomSource rng(seed);
      write_csv(out, sample(net, expanded, rng), precision);
    } else if (optimize_cmd->parsed()) {
      const auto result = optimize_parameters(net, read_data(), OptimizeOptions{epochs, lr});
      detail::save_model(out_path, result.network);
      out << "initial=" << format_fixed(result.initial_log_likelihood, precision) << '\n'
          << "final=" << format_fixed(result.best_log_likelihood, precision) << '\n'
          << "best_epoch=" << result.best_epoch << '\n';
      if (result.excluded_rows) err << "warning: " << result.excluded_rows << " rows have zero likelihood\n";
    } else if (compile_cmd->parsed()) {
      detail::write_file(out_path, emit_source(net, EmitOptions{fn_name, with_main}));
    } else if (plot_cmd->parsed()) {
      detail::write_file(out_path, to_dot(net));
    } else if (stats_cmd->parsed()) {
      const StructureStats st = structure_stats(net);
      out << "sum=" << st.sum_nodes << '\n'
          << "product=" << st.product_nodes << '\n'
          << "leaf=" << st.leaf_nodes << '\n'
          << "edges=" << st.edges << '\n'
          << "depth=" << st.depth << '\n'
          << "params=" << st.free_parameters << '\n';
    }
    return kOk;
  } catch (const detail::usage_error& e) {
    err << "error: " << e.what() << '\n';
    return kUsage;
  } catch (const data_error& e) {
    err << "data error: " << e.what() << '\n';
    return kData;
  } catch (const spn_error& e) {
    err << "model error: " << e.what() << '\n';
    return kModel;
  }
}

}  // namespace spn::cli
