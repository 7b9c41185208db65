#include "hype/json_writer.hpp"

#include <cmath>
#include <cstdio>

namespace hype {

std::string format_real(double x) {
    if (!std::isfinite(x)) return "null";
    char buf[64];
    if (x == 0.0 || std::fabs(x) >= 1e-3) {
        std::snprintf(buf, sizeof buf, "%.6f", x == 0.0 ? 0.0 : x);
    } else {
        std::snprintf(buf, sizeof buf, "%.6g", x);
    }
    return buf;
}

namespace {

void write(const Json& v, int depth, std::string& out) {
    const std::string pad(static_cast<std::size_t>(depth) * 2, ' ');
    const std::string inner(static_cast<std::size_t>(depth + 1) * 2, ' ');
    switch (v.type()) {
        case Json::value_t::object: {
            if (v.empty()) {
                out += "{}";
                return;
            }
            out += "{\n";
            bool first = true;
            for (auto it = v.begin(); it != v.end(); ++it) {
                if (!first) out += ",\n";
                first = false;
                out += inner;
                out += Json(it.key()).dump();
                out += ": ";
                write(it.value(), depth + 1, out);
            }
            out += "\n" + pad + "}";
            return;
        }
        case Json::value_t::array: {
            if (v.empty()) {
                out += "[]";
                return;
            }
            out += "[\n";
            for (std::size_t i = 0; i < v.size(); ++i) {
                if (i) out += ",\n";
                out += inner;
                write(v[i], depth + 1, out);
            }
            out += "\n" + pad + "]";
            return;
        }
        case Json::value_t::number_float:
            out += format_real(v.get<double>());
            return;
        default:
            out += v.dump();
            return;
    }
}

}  // namespace

std::string dump_json(const Json& value) {
    std::string out;
    write(value, 0, out);
    out += '\n';
    return out;
}

}  // namespace hype
