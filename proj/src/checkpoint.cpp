#include "r2net/checkpoint.hpp"

#include <charconv>
#include <fstream>
#include <sstream>
#include <string>
#include <system_error>

#include "r2net/errors.hpp"

namespace r2net {

namespace {

constexpr const char* kMagic = "r2net-checkpoint";
constexpr int kVersion = 1;

void append_double(std::string& out, double v) {
    char buf[32];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
    if (ec != std::errc{}) throw std::runtime_error("checkpoint: cannot format value");
    out.append(buf, ptr);
}

double parse_double(const std::string& token, const std::string& source, std::size_t line) {
    double v = 0.0;
    auto [ptr, ec] = std::from_chars(token.data(), token.data() + token.size(), v);
    if (ec != std::errc{} || ptr != token.data() + token.size()) {
        throw ParseError(source, line, "bad number '" + token + "'");
    }
    return v;
}

}  // namespace

void write_checkpoint(const ParamStore& params, std::ostream& out) {
    out << kMagic << ' ' << kVersion << '\n' << params.entries().size() << '\n';
    std::string line;
    for (const auto& [name, tensor] : params.entries()) {
        out << name << ' ' << tensor.rank();
        for (std::size_t extent : tensor.shape()) out << ' ' << extent;
        out << '\n';
        line.clear();
        for (std::size_t i = 0; i < tensor.size(); ++i) {
            if (i) line.push_back(' ');
            append_double(line, tensor.value(i));
        }
        out << line << '\n';
    }
}

void save_checkpoint(const ParamStore& params, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot open " + path.string() + " for writing");
    write_checkpoint(params, out);
    if (!out) throw std::runtime_error("failed writing " + path.string());
}

void read_checkpoint(ParamStore& params, std::istream& in, const std::string& source) {
    std::string line;
    std::size_t line_no = 0;
    auto next_line = [&]() -> std::istringstream {
        if (!std::getline(in, line)) throw ParseError(source, line_no + 1, "unexpected end of checkpoint");
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        return std::istringstream(line);
    };

    {
        auto header = next_line();
        std::string magic;
        int version = 0;
        if (!(header >> magic >> version) || magic != kMagic) throw ParseError(source, line_no, "not an r2net checkpoint");
        if (version != kVersion) throw ParseError(source, line_no, "unsupported checkpoint version " + std::to_string(version));
    }
    std::size_t count = 0;
    if (!(next_line() >> count)) throw ParseError(source, line_no, "missing tensor count");
    if (count != params.entries().size()) {
        throw ParseError(source, line_no, "checkpoint holds " + std::to_string(count) + " tensors, model expects " +
                                              std::to_string(params.entries().size()));
    }
    std::vector<std::vector<double>> staged;
    for (const auto& [name, tensor] : params.entries()) {
        auto meta = next_line();
        std::string stored_name;
        std::size_t rank = 0;
        if (!(meta >> stored_name >> rank)) throw ParseError(source, line_no, "bad tensor header");
        if (stored_name != name) throw ParseError(source, line_no, "expected tensor '" + name + "', found '" + stored_name + "'");
        Shape shape(rank);
        for (auto& extent : shape) {
            if (!(meta >> extent)) throw ParseError(source, line_no, "bad extent for " + name);
        }
        if (shape != tensor.shape()) {
            throw ParseError(source, line_no, name + ": stored shape " + shape_string(shape) + " vs model " +
                                                  shape_string(tensor.shape()));
        }
        auto data = next_line();
        std::vector<double>& dst = staged.emplace_back(tensor.size());
        std::string token;
        for (double& v : dst) {
            if (!(data >> token)) throw ParseError(source, line_no, "too few values for " + name);
            v = parse_double(token, source, line_no);
        }
        if (data >> token) throw ParseError(source, line_no, "too many values for " + name);
    }
    params.restore(staged);
}

void load_checkpoint(ParamStore& params, const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open " + path.string());
    read_checkpoint(params, in, path.string());
}

}  // namespace r2net
