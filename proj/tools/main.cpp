#include <cstdio>

int main() {
    std::puts("seqforge: CLI under construction");
    return 0;
}
