// streamstat: chunked CSV streaming for LM, CEE and CUEE models.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "streamstat/csv.hpp"
#include "streamstat/engine.hpp"
#include "streamstat/error.hpp"
#include "streamstat/report.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace streamstat;

namespace {

constexpr int kExitSchema = 2;
constexpr int kExitParse = 3;

json read_json_file(const std::string& path, ErrorCode code) {
  std::ifstream in(path);
  if (!in) fail(ErrorCode::Io, "cannot open " + path);
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    fail(code, path + ": " + e.what());
  }
}

// Write-then-rename so an interrupted run never leaves a torn file.
void write_atomically(const fs::path& path, const std::string& text) {
  const fs::path tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) fail(ErrorCode::Io, "cannot write " + tmp.string());
    out << text;
    if (!out) fail(ErrorCode::Io, "write failed for " + tmp.string());
  }
  fs::rename(tmp, path);
}

std::string dump(const json& j) { return j.dump(2) + "\n"; }

struct StreamArgs {
  std::string model;
  std::string in;
  std::optional<std::size_t> chunk_size;
  std::string snapshot;
  std::string out;
  bool resume = false;
  std::optional<std::size_t> max_chunks;
  std::size_t prefetch = 4;
};

int cmd_stream(const StreamArgs& a) {
  engine::ModelConfig cfg = engine::parse_model_config(read_json_file(a.model, ErrorCode::InvalidConfig));
  if (a.chunk_size) {
    if (*a.chunk_size < 1) fail(ErrorCode::InvalidConfig, "chunk size must be >= 1");
    cfg.chunk_size = *a.chunk_size;
  }

  const bool resuming = a.resume && fs::exists(a.snapshot);
  engine::StreamEngine eng = resuming
                                 ? engine::StreamEngine::resume(read_json_file(a.snapshot, ErrorCode::CorruptSnapshot), cfg)
                                 : engine::StreamEngine(cfg);

  std::ifstream file;
  if (a.in != "-") {
    file.open(a.in, std::ios::binary);
    if (!file) fail(ErrorCode::Io, "cannot open " + a.in);
  }
  std::istream& in = a.in == "-" ? std::cin : file;

  io::ChunkSource source(in, io::ColumnSelection{cfg.response, cfg.covariates, cfg.intercept}, cfg.chunk_size);
  source.skip_rows(eng.rows_consumed());

  std::size_t processed = 0;
  bool stopped = false;
  {
    io::PipelinedChunkSource chunks(source, a.prefetch);
    while (auto chunk = chunks.next()) {
      eng.process_chunk(chunk->x, chunk->y);
      write_atomically(a.snapshot, dump(eng.snapshot()));
      if (a.max_chunks && ++processed >= *a.max_chunks) {
        stopped = true;
        break;
      }
    }
  }
  if (stopped) {
    std::cerr << "stopped after " << processed << " chunk(s); resume with --resume\n";
    return 0;
  }

  eng.finish();
  write_atomically(a.snapshot, dump(eng.snapshot()));

  json rep;
  rep["coef"] = report::build(eng, report::ReportKind::Coef);
  if (cfg.kind == engine::ModelKind::Lm) rep["anova"] = report::build(eng, report::ReportKind::Anova);
  rep["diag"] = report::build(eng, report::ReportKind::Diag);
  std::string text;
  for (const auto& [key, value] : rep.items()) text += report::render_text(value) + "\n";

  fs::create_directories(a.out);
  write_atomically(fs::path(a.out) / "report.json", dump(rep));
  write_atomically(fs::path(a.out) / "report.txt", text);
  std::cout << text;
  for (const auto& w : eng.warnings()) std::cerr << "warning: " << w << '\n';
  if (eng.singular()) std::cerr << "warning: SingularState: cumulative information matrix is singular\n";
  return 0;
}

struct ReportArgs {
  std::string snapshot;
  std::string what = "coef";
  std::optional<std::string> contrast;
  std::string format = "both";
};

int cmd_report(const ReportArgs& a) {
  const engine::StreamEngine eng =
      engine::StreamEngine::from_snapshot(read_json_file(a.snapshot, ErrorCode::CorruptSnapshot));
  std::optional<Matrix> c;
  if (a.contrast) c = report::contrast_from_json(read_json_file(*a.contrast, ErrorCode::InvalidConfig), eng.config().p());
  const json r = report::build(eng, report::report_kind_from_string(a.what), c);
  if (a.format != "json") std::cout << report::render_text(r);
  if (a.format == "both") std::cout << '\n';
  if (a.format != "text") std::cout << r.dump() << '\n';
  return 0;
}

int exit_code(const Error& e) {
  switch (e.code()) {
    case ErrorCode::SchemaMismatch:
      return kExitSchema;
    case ErrorCode::ParseError:
      return kExitParse;
    default:
      return 1;
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Streaming regression and estimating equations over chunked CSV input"};
  app.require_subcommand(1);

  StreamArgs sa;
  auto* stream = app.add_subcommand("stream", "Fit a model chunk by chunk");
  stream->add_option("--model", sa.model, "Model config JSON")->required()->check(CLI::ExistingFile);
  stream->add_option("--in", sa.in, "Input CSV, or - for standard input")->required();
  stream->add_option("--chunk-size", sa.chunk_size, "Rows per chunk (overrides the config)");
  stream->add_option("--snapshot", sa.snapshot, "Snapshot path, rewritten after every chunk")->required();
  stream->add_option("--out", sa.out, "Report directory")->required();
  stream->add_flag("--resume", sa.resume, "Continue from the snapshot when it exists");
  stream->add_option("--max-chunks", sa.max_chunks, "Stop after this many chunks");
  stream->add_option("--prefetch", sa.prefetch, "Chunks parsed ahead of the model")->check(CLI::PositiveNumber);

  ReportArgs ra;
  auto* rep = app.add_subcommand("report", "Print a report from a snapshot");
  rep->add_option("--snapshot", ra.snapshot, "Snapshot path")->required();
  rep->add_option("--what", ra.what, "coef, anova, wald or diag")
      ->check(CLI::IsMember({"coef", "anova", "wald", "diag"}));
  rep->add_option("--contrast", ra.contrast, "Contrast matrix as a JSON array of rows (wald)");
  rep->add_option("--format", ra.format, "text, json or both")->check(CLI::IsMember({"text", "json", "both"}));

  CLI11_PARSE(app, argc, argv);

  try {
    if (*stream) return cmd_stream(sa);
    return cmd_report(ra);
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return exit_code(e);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
}
