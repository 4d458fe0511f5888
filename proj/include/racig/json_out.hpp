#pragma once

#include <cstdint>
#include <cstdio>
#include <sstream>
#include <string>
#include <vector>

namespace racig {

// %.17g keeps doubles byte-identical across runs and exact on reload.
inline std::string fmt_double17(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

inline std::string json_escape(const std::string& s) {
    std::string out;
    out.reserve(s.size() + 2);
    for (char c : s) {
        switch (c) {
            case '"': out += "\\\""; break;
            case '\\': out += "\\\\"; break;
            case '\n': out += "\\n"; break;
            case '\r': out += "\\r"; break;
            case '\t': out += "\\t"; break;
            default:
                if (static_cast<unsigned char>(c) < 0x20) {
                    char buf[8];
                    std::snprintf(buf, sizeof(buf), "\\u%04x", c);
                    out += buf;
                } else {
                    out += c;
                }
        }
    }
    return out;
}

// Streaming JSON writer with deterministic output: keys appear in call
// order and numbers use fixed formatting.
class JsonWriter {
public:
    JsonWriter& begin_object() {
        comma();
        out_ << '{';
        stack_.push_back(false);
        return *this;
    }
    JsonWriter& end_object() {
        out_ << '}';
        stack_.pop_back();
        return *this;
    }
    JsonWriter& begin_array() {
        comma();
        out_ << '[';
        stack_.push_back(false);
        return *this;
    }
    JsonWriter& end_array() {
        out_ << ']';
        stack_.pop_back();
        return *this;
    }
    JsonWriter& key(const std::string& k) {
        comma();
        out_ << '"' << json_escape(k) << "\":";
        pending_value_ = true;
        return *this;
    }
    JsonWriter& value(const std::string& v) {
        comma();
        out_ << '"' << json_escape(v) << '"';
        return *this;
    }
    JsonWriter& value(const char* v) { return value(std::string(v)); }
    JsonWriter& value(double v) {
        comma();
        out_ << fmt_double17(v);
        return *this;
    }
    JsonWriter& value(uint64_t v) {
        comma();
        out_ << v;
        return *this;
    }
    JsonWriter& value(int v) {
        comma();
        out_ << v;
        return *this;
    }
    JsonWriter& value(bool v) {
        comma();
        out_ << (v ? "true" : "false");
        return *this;
    }

    std::string str() const { return out_.str(); }

private:
    void comma() {
        if (pending_value_) {
            pending_value_ = false;
            return;
        }
        if (!stack_.empty()) {
            if (stack_.back()) out_ << ',';
            stack_.back() = true;
        }
    }

    std::ostringstream out_;
    std::vector<bool> stack_;
    bool pending_value_ = false;
};

}  // namespace racig
