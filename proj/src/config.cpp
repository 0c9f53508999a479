#include "moyal/config.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include <json.hpp>

namespace moyal {

const char* kVersion = "0.1.0";

void DiagramSettings::resolve_defaults(const ModelParams& params) {
    if (alpha == 0.0) alpha = 0.5 - params.eps;
    if (beta == 0.0) beta = -(params.eps + params.eps_prime);
    if (delta == 0.0) delta = std::min(params.eps_prime / 2.0, 0.01);
}

bool RunConfig::operator==(const RunConfig& o) const {
    return model.theta == o.model.theta && model.mass_sq == o.model.mass_sq &&
           model.lambda == o.model.lambda && model.cutoff == o.model.cutoff &&
           model.eps == o.model.eps && model.eps_prime == o.model.eps_prime &&
           model.dt == o.model.dt && model.seed == o.model.seed &&
           run.t_final == o.run.t_final && run.burn_in == o.run.burn_in &&
           run.snapshot_stride == o.run.snapshot_stride && run.mode == o.run.mode &&
           run.ensemble_size == o.run.ensemble_size && diagrams.alpha == o.diagrams.alpha &&
           diagrams.beta == o.diagrams.beta && diagrams.delta == o.diagrams.delta &&
           diagrams.n_sum == o.diagrams.n_sum && output.directory == o.output.directory &&
           output.formats == o.output.formats && output.snapshot_on == o.output.snapshot_on;
}

namespace {

std::string fmt_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

} // namespace

std::string RunConfig::echo() const {
    std::ostringstream os;
    os << "[model]\n";
    os << "theta = " << fmt_double(model.theta) << "\n";
    os << "mass_sq = " << fmt_double(model.mass_sq) << "\n";
    os << "lambda = " << fmt_double(model.lambda) << "\n";
    os << "cutoff = " << model.cutoff << "\n";
    os << "eps = " << fmt_double(model.eps) << "\n";
    os << "eps_prime = " << fmt_double(model.eps_prime) << "\n";
    os << "dt = " << fmt_double(model.dt) << "\n";
    os << "seed = " << model.seed << "\n";
    os << "\n[run]\n";
    os << "t_final = " << fmt_double(run.t_final) << "\n";
    os << "burn_in = " << fmt_double(run.burn_in) << "\n";
    os << "snapshot_stride = " << run.snapshot_stride << "\n";
    os << "mode = " << (run.mode == IntegrationMode::v_mode ? "v" : "w") << "\n";
    os << "ensemble_size = " << run.ensemble_size << "\n";
    os << "\n[diagrams]\n";
    os << "alpha = " << fmt_double(diagrams.alpha) << "\n";
    os << "beta = " << fmt_double(diagrams.beta) << "\n";
    os << "delta = " << fmt_double(diagrams.delta) << "\n";
    os << "n_sum = ";
    for (std::size_t i = 0; i < diagrams.n_sum.size(); ++i)
        os << (i ? "," : "") << diagrams.n_sum[i];
    os << "\n";
    os << "\n[output]\n";
    os << "directory = " << output.directory << "\n";
    os << "formats = " << output.formats << "\n";
    os << "snapshot_on = " << (output.snapshot_on ? "true" : "false") << "\n";
    return os.str();
}

std::uint64_t RunConfig::hash() const {
    // FNV-1a over the effective config text
    std::uint64_t h = 0xcbf29ce484222325ull;
    for (unsigned char c : echo()) {
        h ^= c;
        h *= 0x100000001b3ull;
    }
    return h;
}

namespace {

double parse_double(const std::string& key, const std::string& value) {
    try {
        std::size_t pos = 0;
        double v = std::stod(value, &pos);
        if (pos != value.size()) throw std::invalid_argument("trailing junk");
        return v;
    } catch (const std::exception&) {
        throw ConfigError("config key '" + key + "': cannot parse number '" + value + "'");
    }
}

long long parse_int(const std::string& key, const std::string& value) {
    try {
        std::size_t pos = 0;
        long long v = std::stoll(value, &pos);
        if (pos != value.size()) throw std::invalid_argument("trailing junk");
        return v;
    } catch (const std::exception&) {
        throw ConfigError("config key '" + key + "': cannot parse integer '" + value + "'");
    }
}

std::string trim(const std::string& s) {
    std::size_t a = s.find_first_not_of(" \t\r");
    if (a == std::string::npos) return {};
    std::size_t b = s.find_last_not_of(" \t\r");
    return s.substr(a, b - a + 1);
}

} // namespace

RunConfig parse_config_text(const std::string& text) {
    RunConfig cfg;
    std::istringstream is(text);
    std::string line, section = "model";
    while (std::getline(is, line)) {
        std::size_t hash_pos = line.find('#');
        if (hash_pos != std::string::npos) line = line.substr(0, hash_pos);
        line = trim(line);
        if (line.empty()) continue;
        if (line.front() == '[' && line.back() == ']') {
            section = trim(line.substr(1, line.size() - 2));
            if (section != "model" && section != "run" && section != "diagrams" &&
                section != "output")
                throw ConfigError("unknown config section '" + section + "'");
            continue;
        }
        std::size_t eq = line.find('=');
        if (eq == std::string::npos) throw ConfigError("malformed config line: '" + line + "'");
        std::string key = trim(line.substr(0, eq));
        std::string value = trim(line.substr(eq + 1));
        std::string full = section + "." + key;

        if (full == "model.theta") cfg.model.theta = parse_double(full, value);
        else if (full == "model.mass_sq") cfg.model.mass_sq = parse_double(full, value);
        else if (full == "model.lambda") cfg.model.lambda = parse_double(full, value);
        else if (full == "model.cutoff") cfg.model.cutoff = static_cast<int>(parse_int(full, value));
        else if (full == "model.eps") cfg.model.eps = parse_double(full, value);
        else if (full == "model.eps_prime") cfg.model.eps_prime = parse_double(full, value);
        else if (full == "model.dt") cfg.model.dt = parse_double(full, value);
        else if (full == "model.seed") cfg.model.seed = static_cast<std::uint64_t>(parse_int(full, value));
        else if (full == "run.t_final") cfg.run.t_final = parse_double(full, value);
        else if (full == "run.burn_in") cfg.run.burn_in = parse_double(full, value);
        else if (full == "run.snapshot_stride") cfg.run.snapshot_stride = static_cast<int>(parse_int(full, value));
        else if (full == "run.mode") {
            if (value == "v") cfg.run.mode = IntegrationMode::v_mode;
            else if (value == "w") cfg.run.mode = IntegrationMode::w_mode;
            else throw ConfigError("config key 'run.mode': expected 'v' or 'w'");
        } else if (full == "run.ensemble_size") cfg.run.ensemble_size = static_cast<int>(parse_int(full, value));
        else if (full == "diagrams.alpha") cfg.diagrams.alpha = parse_double(full, value);
        else if (full == "diagrams.beta") cfg.diagrams.beta = parse_double(full, value);
        else if (full == "diagrams.delta") cfg.diagrams.delta = parse_double(full, value);
        else if (full == "diagrams.n_sum") {
            cfg.diagrams.n_sum.clear();
            std::istringstream vs(value);
            std::string tok;
            while (std::getline(vs, tok, ','))
                cfg.diagrams.n_sum.push_back(static_cast<int>(parse_int(full, trim(tok))));
            if (cfg.diagrams.n_sum.empty())
                throw ConfigError("config key 'diagrams.n_sum': empty list");
        } else if (full == "output.directory") cfg.output.directory = value;
        else if (full == "output.formats") {
            if (value != "csv" && value != "json" && value != "csv,json")
                throw ConfigError("config key 'output.formats': expected csv, json or csv,json");
            cfg.output.formats = value;
        } else if (full == "output.snapshot_on") {
            if (value == "true" || value == "1") cfg.output.snapshot_on = true;
            else if (value == "false" || value == "0") cfg.output.snapshot_on = false;
            else throw ConfigError("config key 'output.snapshot_on': expected true/false");
        } else {
            throw ConfigError("unknown config key '" + full + "'");
        }
    }

    std::string err = cfg.model.validate();
    if (!err.empty()) throw ConfigError(err);
    cfg.model.resolve_defaults();
    cfg.run.resolve_defaults(cfg.model);
    cfg.diagrams.resolve_defaults(cfg.model);
    if (cfg.run.t_final <= cfg.run.burn_in)
        throw ConfigError("run.t_final must exceed run.burn_in");
    return cfg;
}

RunConfig parse_config_file(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw ConfigError("cannot open config file '" + path + "'");
    std::ostringstream os;
    os << f.rdbuf();
    return parse_config_text(os.str());
}

void write_manifest(const std::string& directory, const std::string& subcommand,
                    const RunConfig& config, double wall_seconds,
                    const std::vector<std::string>& outputs) {
    nlohmann::json j;
    j["subcommand"] = subcommand;
    j["version"] = kVersion;
    j["seed"] = config.model.seed;
    j["config_hash"] = config.hash();
    j["config"] = config.echo();
    j["wall_seconds"] = wall_seconds;
    j["outputs"] = outputs;
    std::ofstream f(directory + "/manifest.json");
    f << j.dump(2) << "\n";
}

} // namespace moyal
