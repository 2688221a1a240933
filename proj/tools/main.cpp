#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "textclf/error.hpp"
#include "textclf/runner.hpp"

namespace {

textclf::RunConfig assemble_config(const std::string& config_path,
                                   const std::vector<std::string>& overrides,
                                   const std::string& out_dir) {
  textclf::RunConfig config;
  if (!config_path.empty()) config = textclf::load_run_config(config_path);
  for (const std::string& entry : overrides) {
    const size_t eq = entry.find('=');
    if (eq == std::string::npos) {
      throw textclf::Error(textclf::errc::config_invalid,
                           "--set wants KEY=VALUE, got `" + entry + "`");
    }
    textclf::apply_config_entry(config, entry.substr(0, eq), entry.substr(eq + 1));
  }
  if (!out_dir.empty()) config.out_dir = out_dir;
  return config;
}

std::vector<std::string> stdin_lines() {
  std::vector<std::string> lines;
  std::string line;
  while (std::getline(std::cin, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    lines.push_back(line);
  }
  return lines;
}

void add_config_flags(CLI::App* cmd, std::string& config_path, std::vector<std::string>& overrides,
                      std::string& out_dir) {
  cmd->add_option("--config", config_path, "key=value configuration file");
  cmd->add_option("--set", overrides, "override one config entry (KEY=VALUE)");
  cmd->add_option("--out-dir", out_dir, "directory for outputs");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"text classification toolkit: lexicon, svm, gbdt and transformer families"};
  app.require_subcommand(1);

  std::string config_path, out_dir, data_path, out_path, model_path;
  std::vector<std::string> overrides, texts, model_paths;
  size_t docs = 0;

  CLI::App* train = app.add_subcommand("train", "fit a model and write an artifact");
  add_config_flags(train, config_path, overrides, out_dir);
  train->add_option("--data", data_path, "labeled csv")->required();
  train->add_option("--out", out_path, "artifact path (default <out_dir>/<model>.tclf)");

  CLI::App* eval = app.add_subcommand("eval", "accuracy of an artifact on labeled data");
  eval->add_option("--model", model_path, "artifact path")->required();
  eval->add_option("--data", data_path, "labeled csv")->required();

  CLI::App* predict = app.add_subcommand("predict", "label inputs (stdin when no texts given)");
  predict->add_option("--model", model_path, "artifact path")->required();
  predict->add_option("texts", texts, "input texts");

  CLI::App* pretrain = app.add_subcommand("pretrain", "masked-token + next-sentence pretraining");
  add_config_flags(pretrain, config_path, overrides, out_dir);
  pretrain->add_option("--data", data_path, "one sentence per line")->required();
  pretrain->add_option("--out", out_path, "artifact path (default <out_dir>/pretrained.tclf)");

  CLI::App* report = app.add_subcommand("report", "accuracy leaderboard over artifacts");
  report->add_option("--model", model_paths, "artifact path (repeatable)")->required();
  report->add_option("--data", data_path, "re-evaluate on this labeled csv");

  CLI::App* schedule = app.add_subcommand("schedule-dump", "csv of per-group learning rates");
  add_config_flags(schedule, config_path, overrides, out_dir);
  schedule->add_option("--docs", docs, "training corpus size")->required();

  CLI::App* fixtures = app.add_subcommand("fixtures", "write the synthetic datasets");
  fixtures->add_option("--out-dir", out_dir, "target directory");

  try {
    app.parse(argc, argv);

    if (train->parsed()) {
      textclf::cmd_train(assemble_config(config_path, overrides, out_dir), data_path, std::cout,
                         out_path);
    } else if (eval->parsed()) {
      textclf::cmd_eval(model_path, data_path, std::cout);
    } else if (predict->parsed()) {
      textclf::cmd_predict(model_path, texts.empty() ? stdin_lines() : texts, std::cout);
    } else if (pretrain->parsed()) {
      textclf::cmd_pretrain(assemble_config(config_path, overrides, out_dir), data_path,
                            std::cout, out_path);
    } else if (report->parsed()) {
      std::vector<std::filesystem::path> paths(model_paths.begin(), model_paths.end());
      textclf::cmd_report(paths, data_path, std::cout);
    } else if (schedule->parsed()) {
      textclf::cmd_schedule_dump(assemble_config(config_path, overrides, out_dir), docs,
                                 std::cout);
    } else if (fixtures->parsed()) {
      textclf::cmd_fixtures(out_dir.empty() ? "fixtures" : out_dir, std::cout);
    }
    return 0;
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  } catch (const textclf::Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return e.exit_code();
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 4;
  }
}
