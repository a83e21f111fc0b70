// hrfna: benchmark and conversion front end.

#include <chrono>
#include <cstdint>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "hrfna/config.hpp"
#include "hrfna/experiments.hpp"
#include "hrfna/io.hpp"
#include "hrfna/selftest.hpp"

namespace {

using hrfna::Json;

enum Exit : int { kOk = 0, kUsage = 1, kConfig = 2, kIo = 3, kKernel = 4, kSelftest = 5 };

int exit_code_for(hrfna::ErrorCode code) {
    switch (code) {
        case hrfna::ErrorCode::ConfigError:
        case hrfna::ErrorCode::InvalidPolicy:
        case hrfna::ErrorCode::InvalidModulus:
        case hrfna::ErrorCode::NotCoprime: return kConfig;
        case hrfna::ErrorCode::IoError:
        case hrfna::ErrorCode::ParseError: return kIo;
        default: return kKernel;
    }
}

void emit_error(const std::string& code, const std::string& message, int exit_code) {
    std::cerr << Json{{"error", code}, {"message", message}, {"exit_code", exit_code}}.dump() << "\n";
}

struct Options {
    std::string config_path;
    std::optional<std::uint64_t> seed;
    std::string out;
    bool long_mode = false;
    std::string baselines;
    std::string x_file, y_file, a_file, b_file;
    std::string convert_in;
    std::string convert_direction = "to_hybrid";
};

hrfna::RunConfig build_config(const Options& o) {
    hrfna::RunConfig c = o.config_path.empty() ? hrfna::default_config() : hrfna::load_config(o.config_path);
    if (o.seed) c.seed = o.seed;
    if (!o.out.empty()) c.out = o.out;
    if (o.long_mode) c.long_mode = true;
    if (!o.baselines.empty()) c.baselines = hrfna::detail::split_list(o.baselines == "none" ? "" : o.baselines);
    if (!o.x_file.empty()) c.x_file = o.x_file;
    if (!o.y_file.empty()) c.y_file = o.y_file;
    if (!o.a_file.empty()) c.a_file = o.a_file;
    if (!o.b_file.empty()) c.b_file = o.b_file;
    return c;
}

void write_report(Json report, const hrfna::RunConfig& c, double seconds) {
    report["timing"] = Json{{"wall_seconds", seconds}};
    hrfna::write_atomic(c.out + ".json", report.dump(2) + "\n");
    hrfna::write_atomic(c.out + ".csv", hrfna::report_csv(report));
    const std::string text = hrfna::report_text(report);
    hrfna::write_atomic(c.out + ".txt", text);
    std::cout << text;
}

Json dot_workloads(const hrfna::RunConfig& c, const hrfna::ResolvedConfig& r) {
    Json w = Json::array();
    if (!c.x_file.empty() || !c.y_file.empty()) {
        if (c.x_file.empty() || c.y_file.empty())
            throw hrfna::Error(hrfna::ErrorCode::ConfigError, "both x and y files are required");
        w.push_back(hrfna::run_dot_files(c, r));
        return w;
    }
    for (const auto d : c.distributions)
        for (const auto n : c.lengths) w.push_back(hrfna::run_dot_experiment(c, r, d, n));
    return w;
}

Json matmul_workloads(const hrfna::RunConfig& c, const hrfna::ResolvedConfig& r) {
    Json w = Json::array();
    if (!c.a_file.empty() || !c.b_file.empty()) {
        if (c.a_file.empty() || c.b_file.empty())
            throw hrfna::Error(hrfna::ErrorCode::ConfigError, "both a and b files are required");
        w.push_back(hrfna::run_matmul_files(c, r));
        return w;
    }
    for (const auto n : c.matrix_sizes) w.push_back(hrfna::run_matmul_experiment(c, r, hrfna::Distribution::Uniform, n));
    return w;
}

Json rk4_workloads(const hrfna::RunConfig& c, const hrfna::ResolvedConfig& r) {
    hrfna::OdeProblem p = c.ode;
    if (c.long_mode) p.steps = c.long_steps;
    return Json::array({hrfna::run_rk4_experiment(c, r, p)});
}

int run_command(const std::string& name, const Options& o) {
    const auto start = std::chrono::steady_clock::now();
    hrfna::RunConfig c = build_config(o);
    const hrfna::ResolvedConfig r = hrfna::resolve(c);

    if (name == "selftest") {
        const auto results = hrfna::run_selftest(c, r);
        bool ok = true;
        for (const auto& s : results) {
            std::cout << (s.passed ? "PASS " : "FAIL ") << s.name << ": " << s.detail << "\n";
            ok = ok && s.passed;
        }
        std::cout << (ok ? "selftest passed" : "selftest FAILED") << "\n";
        return ok ? kOk : kSelftest;
    }

    if (name == "convert") {
        const std::string text = hrfna::read_file(o.convert_in);
        std::string out;
        if (o.convert_direction == "to_hybrid") {
            for (const auto& rec : hrfna::parse_jsonl(text)) {
                const hrfna::Ratio v = hrfna::value_record(rec);
                Json j;
                if (const auto d = v.to_dyadic()) {
                    const std::size_t bits = d->is_zero() ? 1 : hrfna::bit_length(boost::multiprecision::abs(d->mantissa()));
                    j = hrfna::to_json(hrfna::from_dyadic(*d, r.moduli, static_cast<unsigned>(bits)));
                } else {
                    j = hrfna::to_json(hrfna::from_rational(v, r.moduli, std::max(2U, r.policy.target_bits)));
                    j["inexact"] = true;
                }
                out += j.dump() + "\n";
            }
        } else if (o.convert_direction == "to_decimal") {
            for (const auto& rec : hrfna::parse_jsonl(text)) {
                const auto x = hrfna::hybrid_from_json(rec.value, r.moduli, rec.line);
                out += Json{{"v", hrfna::phi(x).to_decimal()}}.dump() + "\n";
            }
        } else {
            throw hrfna::Error(hrfna::ErrorCode::ConfigError, "direction must be to_hybrid or to_decimal");
        }
        if (o.out.empty()) {
            std::cout << out;
        } else {
            hrfna::write_atomic(o.out, out);
        }
        return kOk;
    }

    Json workloads = Json::array();
    if (name == "dotprod" || name == "bench")
        for (auto& w : dot_workloads(c, r)) workloads.push_back(std::move(w));
    if (name == "matmul" || name == "bench")
        for (auto& w : matmul_workloads(c, r)) workloads.push_back(std::move(w));
    if (name == "rk4" || name == "bench")
        for (auto& w : rk4_workloads(c, r)) workloads.push_back(std::move(w));

    Json report = hrfna::make_report(name, c, r, std::move(workloads));
    const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    write_report(std::move(report), c, seconds);
    return kOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"hrfna: hybrid residue/floating-point arithmetic benchmarks"};
    app.require_subcommand(1);
    Options o;

    auto add_common = [&](CLI::App* sub) {
        sub->add_option("--config", o.config_path, "INI configuration file");
        sub->add_option("--seed", o.seed, "Seed override for generated inputs");
        sub->add_option("--out", o.out, "Output prefix (reports) or file (convert)");
    };
    auto add_run = [&](CLI::App* sub) {
        add_common(sub);
        sub->add_flag("--long", o.long_mode, "Long RK4 horizon");
        sub->add_option("--baselines", o.baselines, "Comma list of binary32,binary64,bfp or 'none'");
    };

    auto* dot = app.add_subcommand("dotprod", "Dot-product accuracy experiment");
    add_run(dot);
    dot->add_option("--x", o.x_file, "JSONL vector file");
    dot->add_option("--y", o.y_file, "JSONL vector file");
    auto* mm = app.add_subcommand("matmul", "Matrix-multiply accuracy experiment");
    add_run(mm);
    mm->add_option("--a", o.a_file, "JSONL matrix file");
    mm->add_option("--b", o.b_file, "JSONL matrix file");
    add_run(app.add_subcommand("rk4", "RK4 stability experiment"));
    add_run(app.add_subcommand("bench", "All experiments"));
    auto* conv = app.add_subcommand("convert", "Convert between value records and hybrid records");
    add_common(conv);
    conv->add_option("input", o.convert_in, "Input JSONL file")->required();
    conv->add_option("--direction", o.convert_direction, "to_hybrid or to_decimal");
    auto* self = app.add_subcommand("selftest", "Run the invariant suites at reduced scale");
    add_common(self);

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        emit_error("UsageError", e.what(), kUsage);
        return kUsage;
    }

    const std::string name = app.get_subcommands().front()->get_name();
    try {
        return run_command(name, o);
    } catch (const hrfna::Error& e) {
        const int code = exit_code_for(e.code());
        emit_error(hrfna::to_string(e.code()), e.what(), code);
        return code;
    } catch (const std::exception& e) {
        emit_error("InternalError", e.what(), kKernel);
        return kKernel;
    }
}
