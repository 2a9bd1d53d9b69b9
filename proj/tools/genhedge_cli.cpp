// Placeholder main; replaced by the full CLI once the runner lands.
int main() { return 0; }
