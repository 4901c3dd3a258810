// Entry point: service URL from the ?url= query parameter, default to
// the standard local port.

import { Viewer } from './viewer.js';

const params = new URLSearchParams(window.location.search);
const url = params.get('url') ?? 'ws://127.0.0.1:8765';
const root = document.getElementById('app');
if (!root) throw new Error('missing #app mount point');
new Viewer(root, url);
