#pragma once

// Run configuration: INI-style text ("key = value" under [sections]) with
// big integers kept as decimal strings.

#include <cstddef>
#include <cstdint>
#include <fstream>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include "hrfna/core.hpp"
#include "hrfna/hybrid.hpp"
#include "hrfna/ode.hpp"
#include "hrfna/oracle.hpp"
#include "hrfna/workloads.hpp"

namespace hrfna {

struct RunConfig {
    std::vector<std::string> moduli;  // empty means the default eight primes
    unsigned frac_precision = kDefaultFracPrecision;
    std::string tau = "M/4";
    std::string target_bits = "auto";
    RoundingMode mode = RoundingMode::NearestEven;
    std::uint64_t check_every = 1024;
    std::optional<unsigned> fixed_shift;

    std::optional<std::uint64_t> seed;
    std::vector<std::string> baselines = {"binary32", "binary64", "bfp"};
    std::string out = "hrfna_report";
    bool long_mode = false;

    std::vector<Distribution> distributions = {Distribution::Uniform, Distribution::LogUniform};
    std::vector<std::size_t> lengths = {1024, 4096, 16384, 65536};
    std::size_t trials = 8;
    std::vector<std::size_t> matrix_sizes = {64, 128};
    std::string x_file, y_file, a_file, b_file;

    OdeProblem ode;
    std::uint64_t long_steps = 1000000;
    unsigned oracle_bits = 256;

    oracle::BfpConfig bfp;
};

inline constexpr std::uint64_t kDefaultSeed = 20240601;

/// The built-in configuration (the one `hrfna` uses without --config).
inline RunConfig default_config() {
    RunConfig c;
    c.seed = kDefaultSeed;
    return c;
}

namespace detail {

inline std::vector<std::string> split_list(const std::string& text) {
    std::vector<std::string> out;
    std::string item;
    std::istringstream in(text);
    while (std::getline(in, item, ',')) {
        const auto t = trim(item);
        if (!t.empty()) out.emplace_back(t);
    }
    return out;
}

inline std::uint64_t parse_u64(const std::string& key, const std::string& text) {
    try {
        const BigInt v = parse_bigint(std::string(trim(text)));
        if (v < 0 || bit_length(v) > 64) throw Error(ErrorCode::ConfigError, "");
        return v.convert_to<std::uint64_t>();
    } catch (const Error&) {
        throw Error(ErrorCode::ConfigError, key + ": expected a nonnegative integer, got '" + text + "'");
    }
}

inline std::vector<std::size_t> parse_sizes(const std::string& key, const std::string& text) {
    std::vector<std::size_t> out;
    for (const auto& item : split_list(text)) {
        const auto v = parse_u64(key, item);
        if (v == 0) throw Error(ErrorCode::ConfigError, key + ": sizes must be positive");
        out.push_back(static_cast<std::size_t>(v));
    }
    if (out.empty()) throw Error(ErrorCode::ConfigError, key + ": list is empty");
    return out;
}

inline RoundingMode parse_mode(const std::string& text) {
    if (text == "nearest_even") return RoundingMode::NearestEven;
    if (text == "floor_div") return RoundingMode::FloorDiv;
    throw Error(ErrorCode::ConfigError, "policy.mode: expected nearest_even or floor_div, got '" + text + "'");
}

}  // namespace detail

/// Overlays the keys present in `text` onto `base`. Unknown sections or keys
/// are rejected.
inline RunConfig parse_config(const std::string& text, RunConfig base = default_config()) {
    namespace pt = boost::property_tree;
    pt::ptree tree;
    try {
        std::istringstream in(text);
        pt::ini_parser::read_ini(in, tree);
    } catch (const pt::ini_parser_error& e) {
        throw ParseError(e.line(), e.message());
    }

    RunConfig c = std::move(base);
    const std::set<std::string> sections = {"moduli", "policy", "run", "workload", "ode", "bfp"};
    for (const auto& [section, body] : tree) {
        if (!sections.contains(section))
            throw Error(ErrorCode::ConfigError, "unknown section [" + section + "]");
        for (const auto& [key, node] : body) {
            const std::string v = node.get_value<std::string>();
            const std::string name = section + "." + key;
            if (section == "moduli") {
                if (key == "list") c.moduli = detail::split_list(v);
                else if (key == "frac_precision") c.frac_precision = static_cast<unsigned>(detail::parse_u64(name, v));
                else throw Error(ErrorCode::ConfigError, "unknown key " + name);
            } else if (section == "policy") {
                if (key == "tau") c.tau = v;
                else if (key == "target_bits") c.target_bits = v;
                else if (key == "mode") c.mode = detail::parse_mode(v);
                else if (key == "check_every") c.check_every = detail::parse_u64(name, v);
                else if (key == "fixed_shift") {
                    if (v.empty() || v == "none") c.fixed_shift.reset();
                    else c.fixed_shift = static_cast<unsigned>(detail::parse_u64(name, v));
                } else throw Error(ErrorCode::ConfigError, "unknown key " + name);
            } else if (section == "run") {
                if (key == "seed") c.seed = detail::parse_u64(name, v);
                else if (key == "baselines") c.baselines = detail::split_list(v);
                else if (key == "out") c.out = v;
                else throw Error(ErrorCode::ConfigError, "unknown key " + name);
            } else if (section == "workload") {
                if (key == "distributions") {
                    c.distributions.clear();
                    for (const auto& d : detail::split_list(v)) {
                        try {
                            c.distributions.push_back(parse_distribution(d));
                        } catch (const Error& e) {
                            throw Error(ErrorCode::ConfigError, name + ": " + e.what());
                        }
                    }
                } else if (key == "lengths") c.lengths = detail::parse_sizes(name, v);
                else if (key == "trials") c.trials = static_cast<std::size_t>(detail::parse_u64(name, v));
                else if (key == "matrix_sizes") c.matrix_sizes = detail::parse_sizes(name, v);
                else if (key == "x_file") c.x_file = v;
                else if (key == "y_file") c.y_file = v;
                else if (key == "a_file") c.a_file = v;
                else if (key == "b_file") c.b_file = v;
                else throw Error(ErrorCode::ConfigError, "unknown key " + name);
            } else if (section == "ode") {
                if (key == "rhs") {
                    try {
                        c.ode.rhs = parse_rhs_kind(v);
                    } catch (const Error& e) {
                        throw Error(ErrorCode::ConfigError, name + ": " + e.what());
                    }
                } else if (key == "lambda") c.ode.lambda = v;
                else if (key == "y0") c.ode.y0 = v;
                else if (key == "h") c.ode.h = v;
                else if (key == "steps") c.ode.steps = detail::parse_u64(name, v);
                else if (key == "long_steps") c.long_steps = detail::parse_u64(name, v);
                else if (key == "checkpoint_every") c.ode.checkpoint_every = detail::parse_u64(name, v);
                else if (key == "oracle_bits") c.oracle_bits = static_cast<unsigned>(detail::parse_u64(name, v));
                else throw Error(ErrorCode::ConfigError, "unknown key " + name);
            } else if (section == "bfp") {
                if (key == "block_size") c.bfp.block_size = static_cast<std::size_t>(detail::parse_u64(name, v));
                else if (key == "mantissa_bits") c.bfp.mantissa_bits = static_cast<unsigned>(detail::parse_u64(name, v));
                else if (key == "accumulator_bits")
                    c.bfp.accumulator_bits = static_cast<unsigned>(detail::parse_u64(name, v));
                else throw Error(ErrorCode::ConfigError, "unknown key " + name);
            }
        }
    }
    return c;
}

inline RunConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorCode::IoError, "cannot open config '" + path + "'");
    std::ostringstream buf;
    buf << in.rdbuf();
    RunConfig c = parse_config(buf.str(), RunConfig{});
    return c;
}

/// A configuration turned into library objects, with every invariant checked.
struct ResolvedConfig {
    ModulusSetPtr moduli;
    NormalizationPolicy policy;
};

inline ResolvedConfig resolve(const RunConfig& c) {
    ResolvedConfig r;
    try {
        if (c.moduli.empty()) {
            r.moduli = make_modulus_set(std::span<const std::uint64_t>(kDefaultModuli), c.frac_precision);
        } else {
            std::vector<std::uint64_t> ms;
            for (const auto& m : c.moduli) {
                const BigInt v = parse_bigint(m);
                if (v < 0 || bit_length(v) > 64) throw Error(ErrorCode::InvalidModulus, "modulus '" + m + "' out of range");
                ms.push_back(v.convert_to<std::uint64_t>());
            }
            r.moduli = make_modulus_set(std::span<const std::uint64_t>(ms), c.frac_precision);
        }

        r.policy = NormalizationPolicy::defaults(*r.moduli);
        if (c.tau.starts_with("M/")) {
            const BigInt d = parse_bigint(c.tau.substr(2));
            if (d <= 2) throw Error(ErrorCode::InvalidPolicy, "tau = M/d needs d > 2 to stay below M/2");
            r.policy.tau = r.moduli->composite() / d;
        } else {
            r.policy.tau = parse_bigint(c.tau);
        }
        if (c.target_bits != "auto")
            r.policy.target_bits = static_cast<unsigned>(detail::parse_u64("policy.target_bits", c.target_bits));
        r.policy.mode = c.mode;
        r.policy.check_every = c.check_every;
        r.policy.fixed_shift = c.fixed_shift;
        r.policy.validate(*r.moduli);
        c.bfp.validate();
    } catch (const Error& e) {
        if (e.code() == ErrorCode::ConfigError) throw;
        throw Error(ErrorCode::ConfigError, e.what());
    }
    if (c.trials == 0) throw Error(ErrorCode::ConfigError, "workload.trials must be positive");
    if (c.oracle_bits < 64) throw Error(ErrorCode::ConfigError, "ode.oracle_bits must be at least 64");
    for (const auto& b : c.baselines) {
        if (b != "binary32" && b != "binary64" && b != "bfp")
            throw Error(ErrorCode::ConfigError, "unknown baseline '" + b + "'");
    }
    return r;
}

}  // namespace hrfna
