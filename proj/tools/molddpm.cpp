// Copyright 2026 The molddpm Authors
// SPDX-License-Identifier: Apache-2.0

#include "molddpm/commands.hpp"
#include "molddpm/format.hpp"

#include "CLI11.hpp"

#include <fstream>
#include <iostream>

namespace {

using namespace molddpm;

RunConfig resolve_config(const std::string& path) {
  RunConfig config = path.empty() ? RunConfig{} : load_config(path);
  apply_environment(config);
  config.validate();
  return config;
}

void write_lines(const std::vector<std::string>& lines, const std::string& output) {
  std::string text;
  for (const auto& l : lines) text += l + "\n";
  if (output.empty() || output == "-") {
    std::cout << text;
  } else {
    write_file_atomic(output, text);
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Graph VAE with a diffusion latent prior for molecules"};
  app.require_subcommand(1);
  std::string config_path;
  app.add_option("-c,--config", config_path, "YAML run configuration (defaults when omitted)");

  auto* config_cmd = app.add_subcommand("config", "Configuration utilities");
  bool print_default = false;
  config_cmd->add_flag("--print-default", print_default, "Print the default configuration");

  auto* pretrain = app.add_subcommand("pretrain", "Train encoder, decoder and denoiser");

  auto* finetune = app.add_subcommand("finetune", "Fine-tune a pretrained checkpoint on targets");
  std::string checkpoint;
  bool no_baseline = false;
  finetune->add_option("--checkpoint", checkpoint, "Pretrained checkpoint")->required();
  finetune->add_flag("--no-baseline", no_baseline, "Skip the supervised-only baseline");

  auto* evaluate = app.add_subcommand("evaluate", "Results table for a fine-tuned checkpoint");
  evaluate->add_option("--checkpoint", checkpoint, "Fine-tuned checkpoint")->required();

  auto* encode = app.add_subcommand("encode", "Export noiseless latents z1");
  std::string input, output;
  encode->add_option("--checkpoint", checkpoint, "Checkpoint")->required();
  encode->add_option("--input", input, "CSV with a smiles column")->required();
  encode->add_option("--output", output, "Output CSV")->required();

  auto* sample = app.add_subcommand("sample", "Generate molecules");
  int count = 0;
  sample->add_option("--checkpoint", checkpoint, "Checkpoint")->required();
  sample->add_option("-n,--count", count, "Number of molecules")->required()->check(CLI::NonNegativeNumber);
  sample->add_option("--output", output, "Output file, one SMILES per line (stdout when omitted)");

  auto* check = app.add_subcommand("check", "Run the numerical self-checks");
  bool corrupt = false;
  check->add_flag("--corrupt-alpha-bar", corrupt, "Test hook: corrupt one alpha_bar entry")
      ->group("");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (*config_cmd) {
      if (!print_default) {
        std::cerr << config_cmd->help();
        return 2;
      }
      std::cout << to_yaml(RunConfig{});
      return 0;
    }
    const RunConfig config = resolve_config(config_path);
    if (*pretrain) {
      const PretrainResult r = cmd_pretrain(config, &std::cerr);
      std::cout << "checkpoint," << r.checkpoint.string() << "\n"
                << "node_accuracy," << real(r.accuracy.node) << "\n"
                << "edge_accuracy," << real(r.accuracy.edge) << "\n";
    } else if (*finetune) {
      std::cout << mse_table_csv(cmd_finetune(config, checkpoint, !no_baseline, &std::cerr).table);
    } else if (*evaluate) {
      std::cout << mse_table_csv(cmd_evaluate(config, checkpoint));
    } else if (*encode) {
      const std::size_t rows = cmd_encode(config, checkpoint, input, output);
      std::cerr << "encoded " << rows << " molecules\n";
    } else if (*sample) {
      write_lines(cmd_sample(config, checkpoint, count), output);
    } else if (*check) {
      const auto results = cmd_check(config, CheckOptions{corrupt});
      std::cout << format_checks(results);
      for (const auto& r : results) {
        if (!r.passed) {
          std::cerr << "check failed: " << r.name << "\n";
          return 1;
        }
      }
    }
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return exit_code_for(e.code());
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
