#include "hhmm/io.hpp"

#include <charconv>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <stdexcept>

namespace hhmm {

namespace {

std::vector<std::string_view> split(std::string_view line, char sep) {
    std::vector<std::string_view> out;
    std::size_t start = 0;
    for (std::size_t i = 0; i <= line.size(); ++i) {
        if (i == line.size() || line[i] == sep) {
            out.push_back(line.substr(start, i - start));
            start = i + 1;
        }
    }
    return out;
}

// Lines of the file without trailing '\r'; the final newline adds no line.
std::vector<std::string_view> split_lines(std::string_view text) {
    std::vector<std::string_view> out;
    std::size_t start = 0;
    for (std::size_t i = 0; i <= text.size(); ++i) {
        if (i == text.size() || text[i] == '\n') {
            if (i == text.size() && i == start)
                break;
            std::string_view line = text.substr(start, i - start);
            if (!line.empty() && line.back() == '\r')
                line.remove_suffix(1);
            out.push_back(line);
            start = i + 1;
        }
    }
    return out;
}

long parse_long(std::string_view s, const std::string& context) {
    long v = 0;
    const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc{} || ptr != s.data() + s.size())
        throw std::runtime_error(context + ": expected an integer, got '" + std::string(s) + "'");
    return v;
}

} // namespace

std::string format_double(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

double parse_double(std::string_view s, const std::string& context) {
    double v = 0.0;
    const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc{} || ptr != s.data() + s.size())
        throw std::runtime_error(context + ": expected a number, got '" + std::string(s) + "'");
    return v;
}

std::uint64_t fnv1a64(std::string_view bytes) {
    std::uint64_t h = 0xcbf29ce484222325ull;
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 0x100000001b3ull;
    }
    return h;
}

std::string hash_hex(std::string_view bytes) {
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx",
                  static_cast<unsigned long long>(fnv1a64(bytes)));
    return buf;
}

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw std::runtime_error("cannot open '" + path + "' for reading");
    std::string content((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    if (in.bad())
        throw std::runtime_error("read error on '" + path + "'");
    return content;
}

void write_file(const std::string& path, std::string_view content) {
    const std::filesystem::path p(path);
    if (p.has_parent_path())
        std::filesystem::create_directories(p.parent_path());
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out)
        throw std::runtime_error("cannot open '" + path + "' for writing");
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    if (!out)
        throw std::runtime_error("write error on '" + path + "'");
}

void write_data_csv(const std::string& path, const DataSet& data) {
    std::string out = "frame_index,dive_index,duration,max_depth,wiggliness\n";
    for (std::size_t m = 0; m < data.frames.size(); ++m)
        for (std::size_t t = 0; t < data.frames[m].dives.size(); ++t) {
            const CovariateTriple& y = data.frames[m].dives[t];
            out += std::to_string(m + 1);
            out += ',';
            out += std::to_string(t + 1);
            out += ',';
            out += format_double(y.duration);
            out += ',';
            out += format_double(y.max_depth);
            out += ',';
            out += format_double(y.wiggliness);
            out += '\n';
        }
    write_file(path, out);
}

DataSet read_data_csv(const std::string& path) {
    const std::string content = read_file(path);
    const auto lines = split_lines(content);
    if (lines.empty())
        throw std::runtime_error(path + ": empty file");
    if (lines[0] != "frame_index,dive_index,duration,max_depth,wiggliness")
        throw std::runtime_error(path + ": unexpected header '" + std::string(lines[0]) + "'");

    DataSet data;
    long current_frame = 0;
    for (std::size_t i = 1; i < lines.size(); ++i) {
        const std::string where = path + ", line " + std::to_string(i + 1);
        const auto fields = split(lines[i], ',');
        if (fields.size() != 5)
            throw std::runtime_error(where + ": expected 5 fields, got "
                                     + std::to_string(fields.size()));
        const long frame = parse_long(fields[0], where);
        const long dive = parse_long(fields[1], where);
        if (frame == current_frame + 1 && dive == 1) {
            data.frames.emplace_back();
            current_frame = frame;
        } else if (frame != current_frame
                   || dive != static_cast<long>(data.frames.back().dives.size()) + 1) {
            throw std::runtime_error(where + ": frame/dive indices out of order");
        }
        CovariateTriple y;
        y.duration = parse_double(fields[2], where);
        y.max_depth = parse_double(fields[3], where);
        y.wiggliness = parse_double(fields[4], where);
        try {
            y.validate();
        } catch (const std::invalid_argument& e) {
            throw std::runtime_error(where + ": " + e.what());
        }
        data.frames.back().dives.push_back(y);
    }
    data.validate();
    return data;
}

void write_truth_csv(const std::string& path, const SimOutput& sim) {
    std::string out = "frame_index,dive_index,internal_state,production_state\n";
    for (std::size_t m = 0; m < sim.data.frames.size(); ++m)
        for (std::size_t t = 0; t < sim.data.frames[m].dives.size(); ++t) {
            out += std::to_string(m + 1);
            out += ',';
            out += std::to_string(t + 1);
            out += ',';
            out += std::to_string(sim.internal_states[m] + 1);
            out += ',';
            out += std::to_string(sim.dive_states[m][t] + 1);
            out += '\n';
        }
    write_file(path, out);
}

void write_trace_csv(const std::string& path, const Trace& trace) {
    trace.validate();
    std::string out = "# schema=trace/v1\n# burn_in=" + std::to_string(trace.burn_in) + "\n";
    for (const auto& [k, v] : trace.metadata) {
        out += "# ";
        out += k;
        out += '=';
        out += v;
        out += '\n';
    }
    out += "sweep";
    for (const std::string& n : trace.names) {
        out += ',';
        out += n;
    }
    out += ",energy\n";
    for (long s = 0; s < trace.n_sweeps(); ++s) {
        out += std::to_string(s + 1);
        for (const auto& col : trace.columns) {
            out += ',';
            out += format_double(col[static_cast<std::size_t>(s)]);
        }
        out += ',';
        out += format_double(trace.energy[static_cast<std::size_t>(s)]);
        out += '\n';
    }
    write_file(path, out);
}

Trace read_trace_csv(const std::string& path) {
    const std::string content = read_file(path);
    const auto lines = split_lines(content);
    Trace trace;
    std::size_t i = 0;
    bool saw_schema = false;
    for (; i < lines.size() && lines[i].starts_with("# "); ++i) {
        const std::string_view body = lines[i].substr(2);
        const std::size_t eq = body.find('=');
        if (eq == std::string_view::npos)
            throw std::runtime_error(path + ", line " + std::to_string(i + 1)
                                     + ": metadata line without '='");
        const std::string key(body.substr(0, eq));
        const std::string value(body.substr(eq + 1));
        if (key == "schema") {
            if (value != "trace/v1")
                throw std::runtime_error(path + ": unsupported schema '" + value + "'");
            saw_schema = true;
        } else if (key == "burn_in") {
            trace.burn_in = parse_long(value, path + " burn_in");
        } else {
            trace.metadata.emplace_back(key, value);
        }
    }
    if (!saw_schema)
        throw std::runtime_error(path + ": missing '# schema=trace/v1' line");
    if (i >= lines.size())
        throw std::runtime_error(path + ": missing header row");
    const auto header = split(lines[i], ',');
    if (header.size() < 2 || header.front() != "sweep" || header.back() != "energy")
        throw std::runtime_error(path + ": header must be sweep,<parameters...>,energy");
    for (std::size_t c = 1; c + 1 < header.size(); ++c)
        trace.names.emplace_back(header[c]);
    trace.columns.assign(trace.names.size(), {});
    ++i;

    for (; i < lines.size(); ++i) {
        const std::string where = path + ", line " + std::to_string(i + 1);
        const auto fields = split(lines[i], ',');
        if (fields.size() != header.size())
            throw std::runtime_error(where + ": expected " + std::to_string(header.size())
                                     + " fields, got " + std::to_string(fields.size()));
        for (std::size_t c = 0; c < trace.names.size(); ++c)
            trace.columns[c].push_back(parse_double(fields[c + 1], where));
        trace.energy.push_back(parse_double(fields.back(), where));
    }
    if (trace.energy.empty())
        throw std::runtime_error(path + ": no sweeps");
    trace.validate();
    return trace;
}

void write_summary_csv(const std::string& path, const PosteriorSummary& summary,
                       const std::vector<double>* acceptance_fractions) {
    if (acceptance_fractions && acceptance_fractions->size() != summary.rows.size())
        throw std::invalid_argument("write_summary_csv: acceptance column length mismatch");
    std::string out = "parameter,mean,sd,p2,p50,p98";
    if (acceptance_fractions)
        out += ",acceptance_fraction";
    out += '\n';
    for (std::size_t r = 0; r < summary.rows.size(); ++r) {
        const ParamSummary& s = summary.rows[r];
        out += s.name;
        out += ',';
        out += format_double(s.mean);
        out += ',';
        out += format_double(s.sd);
        out += ',';
        out += format_double(s.p2);
        out += ',';
        out += format_double(s.p50);
        out += ',';
        out += format_double(s.p98);
        if (acceptance_fractions) {
            out += ',';
            const double f = (*acceptance_fractions)[r];
            if (f == f) // energy and other unmoved rows carry NaN: empty cell
                out += format_double(f);
        }
        out += '\n';
    }
    write_file(path, out);
}

void write_swaps_csv(const std::string& path, std::span<const SwapRecord> swaps) {
    std::string out = "cycle,lower,upper,delta_energy,delta_beta,probability,accepted\n";
    for (const SwapRecord& r : swaps) {
        out += std::to_string(r.cycle);
        out += ',';
        out += std::to_string(r.lower);
        out += ',';
        out += std::to_string(r.upper);
        out += ',';
        out += format_double(r.delta_energy);
        out += ',';
        out += format_double(r.delta_beta);
        out += ',';
        out += format_double(r.probability);
        out += ',';
        out += r.accepted ? '1' : '0';
        out += '\n';
    }
    write_file(path, out);
}

void write_acf_csv(const std::string& path, std::span<const AcfRow> rows) {
    std::string out = "parameter,lag,acf\n";
    for (const AcfRow& r : rows) {
        out += r.parameter;
        out += ',';
        out += std::to_string(r.lag);
        out += ',';
        out += format_double(r.value);
        out += '\n';
    }
    write_file(path, out);
}

void write_ess_csv(const std::string& path, std::span<const EssRow> rows) {
    std::string out = "parameter,ess\n";
    for (const EssRow& r : rows) {
        out += r.parameter;
        out += ',';
        out += format_double(r.value);
        out += '\n';
    }
    write_file(path, out);
}

void write_manifest(const std::string& path,
                    const std::vector<std::pair<std::string, std::string>>& entries) {
    std::string out;
    for (const auto& [k, v] : entries) {
        out += k;
        out += '=';
        out += v;
        out += '\n';
    }
    write_file(path, out);
}

} // namespace hhmm
