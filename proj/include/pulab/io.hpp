#pragma once

// Experiment configs, the CSV dialect used by every artifact, and plot-script
// emission for those artifacts.

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "common.hpp"

namespace pulab {

struct ExperimentConfig {
    std::string command;                                  // e.g. "lab evolve"
    nlohmann::json params = nlohmann::json::object();     // flat name -> value

    bool operator==(const ExperimentConfig&) const = default;
};

inline void to_json(nlohmann::json& j, const ExperimentConfig& c) {
    j = {{"command", c.command}, {"params", c.params}};
}

inline void from_json(const nlohmann::json& j, ExperimentConfig& c) {
    if (!j.is_object() || !j.contains("command") || !j.at("command").is_string())
        throw InvalidArgument("config: expected an object with a string \"command\"");
    c.command = j.at("command").get<std::string>();
    c.params = j.value("params", nlohmann::json::object());
    if (!c.params.is_object()) throw InvalidArgument("config: \"params\" must be an object");
}

/// One-line JSON. Doubles print in shortest round-trip form, so parsing
/// the dump gives back the same bits.
inline std::string dump_config(const ExperimentConfig& c) { return nlohmann::json(c).dump(); }

inline ExperimentConfig parse_config(const std::string& text) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
        throw InvalidArgument(std::string("config: ") + e.what());
    }
    return j.get<ExperimentConfig>();
}

inline ExperimentConfig load_config_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw InvalidArgument("config: cannot open " + path.string());
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_config(ss.str());
}

// ---------------------------------------------------------------- CSV

/// 17 significant digits.
inline std::string format_number(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

/// A CSV cell; complex values spread over two columns.
struct Cell {
    Cell(double v) : re(v) {}
    Cell(int v) : re(v) {}
    Cell(std::size_t v) : re(static_cast<double>(v)) {}
    Cell(bool v) : re(v ? 1.0 : 0.0) {}
    Cell(cplx v) : re(v.real()), im(v.imag()), complex(true) {}

    double re = 0.0, im = 0.0;
    bool complex = false;
};

/// "name" -> {"name_re", "name_im"}
inline std::vector<std::string> complex_columns(const std::string& name) { return {name + "_re", name + "_im"}; }

inline std::vector<std::string> columns(std::initializer_list<std::vector<std::string>> groups) {
    std::vector<std::string> out;
    for (const auto& g : groups) out.insert(out.end(), g.begin(), g.end());
    return out;
}

/// Header: version line, config line, optional result lines, column names.
/// Every header line starts with '#'.
class CsvWriter {
public:
    CsvWriter(std::ostream& out, const ExperimentConfig& config, std::vector<std::string> names,
              const nlohmann::json& result = nullptr)
        : out_(out), width_(names.size()) {
        out_ << "# version: " << version_string << '\n';
        out_ << "# config: " << dump_config(config) << '\n';
        if (!result.is_null()) out_ << "# result: " << result.dump() << '\n';
        out_ << "# columns: ";
        for (std::size_t i = 0; i < names.size(); ++i) out_ << (i ? "," : "") << names[i];
        out_ << '\n';
    }

    void row(std::initializer_list<Cell> cells) { row(std::vector<Cell>(cells)); }

    void row(const std::vector<Cell>& cells) {
        std::string line;
        std::size_t n = 0;
        for (const auto& c : cells) {
            if (n) line += ',';
            line += format_number(c.re);
            ++n;
            if (c.complex) {
                line += ',' + format_number(c.im);
                ++n;
            }
        }
        if (n != width_) throw NumericalFailure("CsvWriter: row has " + std::to_string(n) + " columns, expected " +
                                                std::to_string(width_));
        out_ << line << '\n';
    }

private:
    std::ostream& out_;
    std::size_t width_;
};

struct CsvTable {
    std::string version;
    ExperimentConfig config;
    nlohmann::json result;  // null when the artifact has no result line
    std::vector<std::string> names;
    std::vector<std::vector<double>> rows;

    int column(const std::string& name) const {
        for (std::size_t i = 0; i < names.size(); ++i)
            if (names[i] == name) return static_cast<int>(i);
        throw InvalidArgument("artifact has no column " + name);
    }
};

inline CsvTable read_csv(std::istream& in) {
    CsvTable t;
    std::string line;
    auto after = [](const std::string& s, const std::string& key) -> std::optional<std::string> {
        if (s.rfind(key, 0) == 0) return s.substr(key.size());
        return std::nullopt;
    };
    bool have_config = false;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        if (line[0] == '#') {
            if (auto v = after(line, "# version: ")) t.version = *v;
            if (auto v = after(line, "# config: ")) {
                t.config = parse_config(*v);
                have_config = true;
            }
            if (auto v = after(line, "# result: ")) t.result = nlohmann::json::parse(*v);
            if (auto v = after(line, "# columns: ")) {
                std::stringstream ss(*v);
                std::string name;
                while (std::getline(ss, name, ',')) t.names.push_back(name);
            }
            continue;
        }
        std::vector<double> r;
        std::stringstream ss(line);
        std::string cell;
        while (std::getline(ss, cell, ',')) r.push_back(std::strtod(cell.c_str(), nullptr));
        if (r.size() != t.names.size()) throw InvalidArgument("artifact: row width does not match the columns line");
        t.rows.push_back(std::move(r));
    }
    if (!have_config) throw InvalidArgument("artifact: no embedded config");
    return t;
}

inline CsvTable read_csv_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw InvalidArgument("missing artifact: " + path.string());
    return read_csv(in);
}

/// JSON artifacts carry the same provenance as CSV headers.
inline nlohmann::json json_artifact(const ExperimentConfig& config, const nlohmann::json& result) {
    return {{"version", version_string}, {"config", config}, {"result", result}};
}

// ---------------------------------------------------------------- process plumbing

inline int exit_code(ErrorKind k) {
    switch (k) {
        case ErrorKind::config: return 2;
        case ErrorKind::degenerate: return 3;
        case ErrorKind::accuracy: return 4;
        case ErrorKind::internal: return 5;
    }
    return 5;
}

inline constexpr const char* kOutputDirEnv = "PULAB_OUTPUT_DIR";

/// Relative paths land in $PULAB_OUTPUT_DIR when it is set.
inline std::filesystem::path resolve_output(const std::filesystem::path& p) {
    if (p.is_absolute()) return p;
    const char* dir = std::getenv(kOutputDirEnv);
    if (dir == nullptr || *dir == '\0') return p;
    return std::filesystem::path(dir) / p;
}

inline std::ofstream open_output(const std::filesystem::path& p) {
    if (p.has_parent_path()) std::filesystem::create_directories(p.parent_path());
    std::ofstream out(p);
    if (!out) throw InvalidArgument("cannot write " + p.string());
    return out;
}

// ---------------------------------------------------------------- plot scripts

/// gnuplot script for one artifact. The plot is chosen from the command
/// embedded in the artifact header.
inline std::string plot_script(const std::filesystem::path& artifact) {
    const CsvTable t = read_csv_file(artifact);
    const std::string data = std::filesystem::absolute(artifact).string();
    const std::string cmd = t.config.command;
    std::ostringstream s;
    s << "# " << version_string << "\n# source: " << data << "\n";
    s << "set datafile separator ','\nset datafile commentschars '#'\nset grid\n";
    s << "set terminal pngcairo size 900,600\nset output '" << artifact.stem().string() << ".png'\n";
    auto col = [&](const std::string& n) { return std::to_string(t.column(n) + 1); };
    if (cmd == "propagator trotter-converge") {
        s << "set logscale xy\nset xlabel 'N'\nset ylabel 'max error'\nset title 'Trotter convergence'\n";
        s << "plot '" << data << "' using " << col("steps") << ":" << col("error")
          << " with linespoints title 'max |K_N - K|'\n";
    } else if (cmd == "lab divergence-scan") {
        s << "set logscale x\nset xlabel 'cutoff R'\nset ylabel '|matrix element|'\nset title 'Divergence scan'\n";
        s << "plot '" << data << "' using " << col("cutoff") << ":(sqrt($" << col("element_re") << "**2+$"
          << col("element_im") << "**2)) with linespoints title 'X', '' using " << col("cutoff") << ":(sqrt($"
          << col("control_re") << "**2+$" << col("control_im") << "**2)) with linespoints title 'control'\n";
    } else if (cmd == "propagator euclid-pitfall") {
        const double period = t.result.is_object() ? t.result.value("detected_period", 0.0) : 0.0;
        s << "set xlabel 'tau'\nset ylabel 'K(0,0;-i tau)'\nset title 'Euclidean continuation'\n";
        if (period > 0.0)
            s << "set arrow from " << format_number(period) << ", graph 0 to " << format_number(period)
              << ", graph 1 nohead dt 2\nset label 'detected period " << format_number(period) << "' at "
              << format_number(period) << ", graph 0.95 offset 1,0\n";
        s << "plot '" << data << "' using " << col("tau") << ":" << col("inverted_re")
          << " with lines title 'Re inverted', '' using " << col("tau") << ":" << col("harmonic")
          << " with lines title 'harmonic'\n";
    } else if (cmd == "lab evolve" || cmd == "lab dilrot-evolve") {
        s << "set logscale y\nset xlabel 't'\nset ylabel '|norm - norm(0)|'\nset title 'Norm drift'\n";
        s << "plot '" << data << "' using " << col("t") << ":(abs($" << col("drift") << ")+1e-18) with lines title 'drift'\n";
    } else if (cmd == "lab commutator") {
        s << "set logscale xy\nset xlabel 'N'\nset ylabel 'residual'\nset title 'Commutator residual'\n";
        s << "plot '" << data << "' using " << col("points") << ":" << col("residual") << " with linespoints title 'residual'\n";
    } else {
        s << "set xlabel '" << t.names.at(0) << "'\nset title '" << cmd << "'\n";
        s << "plot ";
        for (std::size_t c = 1; c < t.names.size(); ++c)
            s << (c > 1 ? ", " : "") << "'" << data << "' using 1:" << c + 1 << " with lines title '" << t.names[c] << "'";
        s << "\n";
    }
    return s.str();
}

}  // namespace pulab
