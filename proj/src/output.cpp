#include "bellsim/output.hpp"

#include <cstdio>
#include <fstream>
#include <iostream>
#include <stdexcept>

#include "json.hpp"

namespace bellsim {

namespace {

using ordered_json = nlohmann::ordered_json;

std::string meta_comment_lines(const MetaList& meta) {
    std::string out;
    for (const auto& [key, value] : meta) {
        out += "# ";
        out += key;
        out += '=';
        out += value;
        out += '\n';
    }
    return out;
}

ordered_json meta_object(const MetaList& meta) {
    ordered_json obj = ordered_json::object();
    for (const auto& [key, value] : meta) obj[key] = value;
    return obj;
}

std::string wrap_rows(const MetaList& meta, ordered_json rows) {
    ordered_json doc = ordered_json::object();
    doc["meta"] = meta_object(meta);
    doc["rows"] = std::move(rows);
    return doc.dump(2) + "\n";
}

}  // namespace

std::string format_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.12g", v);
    return buf;
}

std::string trials_to_csv(const std::vector<TrialResult>& rows, const MetaList& meta) {
    std::string out = meta_comment_lines(meta);
    out += "trial,chsh,xA,xA2,yB,yB2,minus_pos,violated,chsh_err\n";
    for (const TrialResult& r : rows) {
        out += std::to_string(r.trial_index);
        out += ',';
        out += format_double(r.chsh.value);
        out += ',';
        out += std::to_string(r.chsh.xa);
        out += ',';
        out += std::to_string(r.chsh.xa2);
        out += ',';
        out += std::to_string(r.chsh.yb);
        out += ',';
        out += std::to_string(r.chsh.yb2);
        out += ',';
        out += std::to_string(r.chsh.minus_pos);
        out += ',';
        out += r.violated ? '1' : '0';
        out += ',';
        if (r.chsh_error) out += format_double(*r.chsh_error);
        out += '\n';
    }
    return out;
}

std::string curve_to_csv(const ViolationCurve& curve, const MetaList& meta) {
    std::string out = meta_comment_lines(meta);
    out += "axis,probability,stderr\n";
    for (const CurvePoint& p : curve) {
        out += format_double(p.axis);
        out += ',';
        out += format_double(p.probability);
        out += ',';
        out += format_double(p.std_error);
        out += '\n';
    }
    return out;
}

std::string histogram_to_csv(const std::vector<HistogramBin>& bins,
                             const MetaList& meta) {
    std::string out = meta_comment_lines(meta);
    out += "bin_lo,bin_hi,count\n";
    for (const HistogramBin& b : bins) {
        out += format_double(b.lo);
        out += ',';
        out += format_double(b.hi);
        out += ',';
        out += std::to_string(b.count);
        out += '\n';
    }
    return out;
}

std::string trials_to_json(const std::vector<TrialResult>& rows, const MetaList& meta) {
    ordered_json arr = ordered_json::array();
    for (const TrialResult& r : rows) {
        ordered_json row = ordered_json::object();
        row["trial"] = r.trial_index;
        row["chsh"] = r.chsh.value;
        row["xA"] = r.chsh.xa;
        row["xA2"] = r.chsh.xa2;
        row["yB"] = r.chsh.yb;
        row["yB2"] = r.chsh.yb2;
        row["minus_pos"] = r.chsh.minus_pos;
        row["violated"] = r.violated;
        if (r.chsh_error) {
            row["chsh_err"] = *r.chsh_error;
        } else {
            row["chsh_err"] = nullptr;
        }
        arr.push_back(std::move(row));
    }
    return wrap_rows(meta, std::move(arr));
}

std::string curve_to_json(const ViolationCurve& curve, const MetaList& meta) {
    ordered_json arr = ordered_json::array();
    for (const CurvePoint& p : curve) {
        ordered_json row = ordered_json::object();
        row["axis"] = p.axis;
        row["probability"] = p.probability;
        row["stderr"] = p.std_error;
        arr.push_back(std::move(row));
    }
    return wrap_rows(meta, std::move(arr));
}

std::string histogram_to_json(const std::vector<HistogramBin>& bins,
                              const MetaList& meta) {
    ordered_json arr = ordered_json::array();
    for (const HistogramBin& b : bins) {
        ordered_json row = ordered_json::object();
        row["bin_lo"] = b.lo;
        row["bin_hi"] = b.hi;
        row["count"] = b.count;
        arr.push_back(std::move(row));
    }
    return wrap_rows(meta, std::move(arr));
}

void write_text(const std::string& path, const std::string& content) {
    if (path == "-") {
        std::cout << content;
        std::cout.flush();
        if (!std::cout) {
            throw std::runtime_error("write failed: stdout");
        }
        return;
    }
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw std::runtime_error("cannot open for writing: " + path);
    }
    out << content;
    out.flush();
    if (!out) {
        throw std::runtime_error("write failed: " + path);
    }
}

}  // namespace bellsim
