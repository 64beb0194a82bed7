#include <cstdio>

int main() {
    std::puts("mfpod: placeholder");
    return 0;
}
